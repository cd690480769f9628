//! `kernel-connect`: evaluate kernels, covariant derivatives, transports and
//! dilations from the shell, and run the seeded verification suites.
//!
//! Exit codes: 0 success, 1 a residual exceeded its tolerance (or a
//! numerical failure), 2 usage or configuration error.

mod literals;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use kernel_connect::connections::{
    scalar_transport_quadrature, transport_convergence, Backend, ConnectionEvaluator, CovariantDerivative, Section,
};
use kernel_connect::cpmaps::{
    cp_covariant_derivative, cp_kernel, generic_cp_covariant_derivative, stinespring_dilate, verify_dilation, CpMap,
};
use kernel_connect::kernels::{gram_matrix, positivity_certificate, BasePoint, Domain, Kernel, KernelSpec};
use kernel_connect::numerics::csv::{format_complex, format_matrix, format_vector, parse_vector, read_matrix};
use kernel_connect::numerics::{c64, vec_distance, C64, DEFAULT_TOL};
use kernel_connect::random::seeded_rng;
use kernel_connect::rkhs::build_rkhs;
use kernel_connect::verify::{grassmann_three_way, run_suite, Fault, Suite, VerifyOptions, VerifyReport};
use kernel_connect::Error;

use literals::{parse_curve, parse_direction, parse_point};

/// Agreement required between backends in `connect covderiv` and `cp covderiv`.
const AGREEMENT_TOL: f64 = 1e-6;
/// Universality residual bound for `rkhs universality`.
const UNIVERSALITY_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "kernel-connect",
    version,
    about = "Connections induced by reproducing kernels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kernel values and Gram matrices.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Sampled reproducing kernel Hilbert spaces.
    #[command(subcommand)]
    Rkhs(RkhsCmd),
    /// Covariant derivatives and parallel transport.
    #[command(subcommand)]
    Connect(ConnectCmd),
    /// Universal connection on the Grassmannian.
    #[command(subcommand)]
    Grassmann(GrassmannCmd),
    /// Completely positive maps given by a Choi matrix.
    #[command(subcommand)]
    Cp(CpCmd),
    /// Run verification suites and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct KernelArg {
    /// Kernel spec, e.g. `bergman-disk:nu=2` or `universal:n=4,k=2`.
    #[arg(long, value_parser = parse_spec)]
    kernel: KernelSpec,
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    /// Print κ(s, t) as CSV.
    Eval {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true)]
        t: String,
    },
    /// Print the Gram matrix as CSV; fails when it is not positive semidefinite.
    Gram {
        #[command(flatten)]
        kernel: KernelArg,
        /// Sample point; repeat for several.
        #[arg(long = "point", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum RkhsCmd {
    /// Print the Gram matrix of the sampled space as CSV.
    Gram {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long = "point", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Print {"residual", "min_eig"} for the sampled universality identity.
    Universality {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long = "point", required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BuiltinSection {
    /// Constant all-ones section.
    One,
    /// Linear in the base point.
    Linear,
    /// Non-holomorphic polynomial (vector domains only).
    Mixed,
}

#[derive(Subcommand, Debug)]
enum ConnectCmd {
    /// Covariant derivative by all three backends.
    Covderiv {
        #[command(flatten)]
        kernel: KernelArg,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        direction: String,
        #[arg(long, value_enum, default_value = "one")]
        section: BuiltinSection,
    },
    /// Parallel transport along a line with a step-halving convergence table (CSV).
    Transport {
        #[command(flatten)]
        kernel: KernelArg,
        /// `line:<start>:<direction>`, traversed for t in [0, 1].
        #[arg(long, allow_hyphen_values = true)]
        curve: String,
        /// Comma-separated step counts.
        #[arg(long, default_value = "64,128,256,512", value_delimiter = ',')]
        steps: Vec<usize>,
        /// Initial fiber vector; defaults to all ones.
        #[arg(long, allow_hyphen_values = true)]
        v0: Option<String>,
    },
}

#[derive(Subcommand, Debug)]
enum GrassmannCmd {
    /// Three-way agreement of the universal connection on Gr(k, ℂⁿ).
    Verify {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct ChoiArg {
    /// Choi matrix as complex CSV.
    #[arg(long)]
    choi: PathBuf,
    /// Input dimension n; inferred from unitality when omitted.
    #[arg(long)]
    input_dim: Option<usize>,
}

impl ChoiArg {
    fn load(&self) -> kernel_connect::Result<CpMap> {
        CpMap::from_choi_inferred(read_matrix(&self.choi)?, self.input_dim)
    }
}

#[derive(Subcommand, Debug)]
enum CpCmd {
    /// Minimal Stinespring dilation: JSON summary, with V as CSV.
    Dilate {
        #[command(flatten)]
        choi: ChoiArg,
        /// Write V here as CSV instead of embedding it in the JSON.
        #[arg(long)]
        v_out: Option<PathBuf>,
    },
    /// Print K^Ψ(s, t) = Ψ(s⁻¹t) as CSV; points are `seed:<n>` or `@file.csv`.
    Kernel {
        #[command(flatten)]
        choi: ChoiArg,
        #[arg(long)]
        s: String,
        #[arg(long)]
        t: String,
    },
    /// Closed formula vs. generic pipeline for φ(u) = first m entries of u·f₀.
    Covderiv {
        #[command(flatten)]
        choi: ChoiArg,
        #[arg(long)]
        point: String,
        #[arg(long)]
        direction: String,
        /// f₀ in ℂⁿ; defaults to all ones.
        #[arg(long, allow_hyphen_values = true)]
        f0: Option<String>,
    },
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// `all` or one of the module suites.
    #[arg(default_value = "all", value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true, value_parser = parse_fault)]
    inject_fault: Option<Fault>,
}

fn parse_spec(s: &str) -> Result<KernelSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    ResidualFailure,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotPsd { .. } | Error::Singular(_) | Error::NoConvergence { .. } | Error::NonFinite(_) => 1,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = Result<Outcome, Failure>;

/// `KERNEL_CONNECT_TOL`, the tolerance for positivity certificates.
fn global_tolerance() -> Result<f64, Failure> {
    match std::env::var("KERNEL_CONNECT_TOL") {
        Ok(v) => match v.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
            _ => Err(config_error(format!(
                "KERNEL_CONNECT_TOL must be a positive number, got `{v}`"
            ))),
        },
        Err(_) => Ok(DEFAULT_TOL),
    }
}

/// Writes to stdout; a closed pipe (`| head`) ends the process quietly.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| config_error(e.to_string()))?;
    emit(&format!("{text}\n"));
    Ok(())
}

fn complex_strings(v: &[C64]) -> Vec<String> {
    v.iter().map(|&z| format_complex(z)).collect()
}

fn points_for(kernel: &Kernel, texts: &[String]) -> Result<Vec<BasePoint>, Failure> {
    texts
        .iter()
        .map(|t| parse_point(kernel.domain(), t).map_err(Failure::from))
        .collect()
}

fn builtin_section(which: BuiltinSection, kernel: &Kernel) -> Result<Section, Failure> {
    let m = kernel.fiber_dim();
    let ones = vec![c64(1.0, 0.0); m];
    let vector_domain = matches!(
        kernel.domain(),
        Domain::Disk | Domain::HalfPlane | Domain::Complex { .. }
    );
    Ok(match (which, kernel.domain()) {
        (BuiltinSection::One, _) => Section::constant(ones),
        (BuiltinSection::Linear, _) if vector_domain => Section::new(move |s| {
            let z = s
                .as_vector()
                .ok_or_else(|| Error::Precondition("expected a vector point".into()))?;
            Ok(vec![z[0]; m])
        }),
        (BuiltinSection::Mixed, _) if vector_domain => Section::new(move |s| {
            let z = s
                .as_vector()
                .ok_or_else(|| Error::Precondition("expected a vector point".into()))?;
            let (a, b) = (z[0], z[z.len() - 1]);
            Ok(vec![c64(1.0, 0.0) + a.conj() * 0.5 + a * b + b * 0.3; m])
        }),
        (BuiltinSection::Linear, Domain::Unitary { n }) => {
            let f0 = vec![c64(1.0, 0.0); *n];
            Section::new(move |s| {
                let u = s
                    .as_unitary()
                    .ok_or_else(|| Error::Precondition("expected a unitary point".into()))?;
                Ok(u.mat_vec(&f0)?[..m].to_vec())
            })
        }
        (BuiltinSection::Linear, Domain::Grassmann { n, .. }) => {
            let f0 = vec![c64(1.0, 0.0); *n];
            Section::new(move |s| {
                let p = s
                    .as_grass()
                    .ok_or_else(|| Error::Precondition("expected a Grassmannian point".into()))?;
                p.coordinates(&p.project(&f0)?)
            })
        }
        (w, d) => return Err(config_error(format!("section {w:?} is not available on {d:?}"))),
    })
}

fn kernel_cmd(cmd: KernelCmd) -> CmdResult {
    match cmd {
        KernelCmd::Eval { kernel, s, t } => {
            let k = kernel.kernel.build()?;
            let (s, t) = (parse_point(k.domain(), &s)?, parse_point(k.domain(), &t)?);
            emit(&format_matrix(&k.eval(&s, &t)?));
            Ok(Outcome::Pass)
        }
        KernelCmd::Gram { kernel, points } => {
            let k = kernel.kernel.build()?;
            let g = gram_matrix(&k, &points_for(&k, &points)?)?;
            emit(&format_matrix(&g));
            let cert = positivity_certificate(&g, global_tolerance()?)?;
            if cert.is_psd {
                Ok(Outcome::Pass)
            } else {
                eprintln!("Gram matrix is not PSD: min eigenvalue {:e}", cert.min_eigenvalue);
                Ok(Outcome::ResidualFailure)
            }
        }
    }
}

fn rkhs_cmd(cmd: RkhsCmd) -> CmdResult {
    let tol = global_tolerance()?;
    let (kernel, points, universality) = match cmd {
        RkhsCmd::Gram { kernel, points } => (kernel, points, false),
        RkhsCmd::Universality { kernel, points } => (kernel, points, true),
    };
    let k = kernel.kernel.build()?;
    let pts = points_for(&k, &points)?;
    let g = gram_matrix(&k, &pts)?;
    let cert = positivity_certificate(&g, tol)?;
    if !cert.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: cert.min_eigenvalue,
        }
        .into());
    }
    let r = build_rkhs(&k, pts, 0.0)?;
    if !universality {
        emit(&format_matrix(r.gram()));
        return Ok(Outcome::Pass);
    }
    let residual = r.universality_residual()?;
    print_json(&json!({ "residual": residual, "min_eig": cert.min_eigenvalue }))?;
    Ok(if residual < UNIVERSALITY_TOL {
        Outcome::Pass
    } else {
        Outcome::ResidualFailure
    })
}

fn connect_cmd(cmd: ConnectCmd) -> CmdResult {
    match cmd {
        ConnectCmd::Covderiv {
            kernel,
            point,
            direction,
            section,
        } => {
            let k = kernel.kernel.build()?;
            let s = parse_point(k.domain(), &point)?;
            let x = parse_direction(k.domain(), &s, &direction)?;
            let sigma = builtin_section(section, &k)?;
            let mut values = Vec::new();
            for backend in Backend::ALL {
                values.push(ConnectionEvaluator::new(&k, backend).covariant_derivative(&sigma, &s, &x)?);
            }
            let mut worst = 0.0f64;
            for i in 0..values.len() {
                for j in i + 1..values.len() {
                    worst = worst.max(vec_distance(&values[i], &values[j]));
                }
            }
            print_json(&json!({
                "kernel": k.name(),
                "closed": complex_strings(&values[0]),
                "direct": complex_strings(&values[1]),
                "sampled": complex_strings(&values[2]),
                "max_disagreement": worst,
            }))?;
            Ok(if worst < AGREEMENT_TOL {
                Outcome::Pass
            } else {
                Outcome::ResidualFailure
            })
        }
        ConnectCmd::Transport {
            kernel,
            curve,
            steps,
            v0,
        } => {
            let k = kernel.kernel.build()?;
            let gamma = parse_curve(k.domain(), &curve)?;
            let v0 = match v0 {
                Some(text) => parse_vector(&text)?,
                None => vec![c64(1.0, 0.0); k.fiber_dim()],
            };
            if steps.is_empty() || steps.contains(&0) {
                return Err(config_error("step counts must be positive"));
            }
            // Scalar fibers have a quadrature closed form; otherwise compare
            // against a run with eight times the finest step count.
            let reference = if k.fiber_dim() == 1 && v0.len() == 1 {
                vec![scalar_transport_quadrature(&k, &gamma, v0[0], 256)?]
            } else {
                let finest = steps.iter().max().copied().unwrap_or(1) * 8;
                kernel_connect::connections::parallel_transport(&k, &gamma, &v0, finest)?
            };
            let rows = transport_convergence(&k, &gamma, &v0, &steps, &reference)?;
            let header: Vec<String> = (0..v0.len()).map(|i| format!("value_{i}")).collect();
            emit(&format!("steps,error,order,{}\n", header.join(",")));
            for row in &rows {
                let order = row.order.map(|o| o.to_string()).unwrap_or_default();
                emit(&format!(
                    "{},{},{},{}\n",
                    row.steps,
                    row.error,
                    order,
                    format_vector(&row.value)
                ));
            }
            Ok(Outcome::Pass)
        }
    }
}

fn report_outcome(report: &VerifyReport) -> Outcome {
    if report.passed {
        Outcome::Pass
    } else {
        for name in &report.failed {
            eprintln!("FAILED: {name}");
        }
        Outcome::ResidualFailure
    }
}

fn grassmann_cmd(cmd: GrassmannCmd) -> CmdResult {
    let GrassmannCmd::Verify { n, k, probes, seed } = cmd;
    if k == 0 || k > n {
        return Err(config_error(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    let checks = grassmann_three_way(n, k, probes, &mut seeded_rng(seed));
    let report = VerifyReport::from_checks(seed, Suite::Grassmann, checks);
    print_json(&report)?;
    Ok(report_outcome(&report))
}

fn cp_cmd(cmd: CpCmd) -> CmdResult {
    match cmd {
        CpCmd::Dilate { choi, v_out } => {
            let psi = choi.load()?;
            let s = stinespring_dilate(&psi)?;
            let residual = verify_dilation(&psi, &s)?;
            let isometry = s.isometry_residual();
            let v = s.isometry();
            let mut summary = json!({
                "input_dim": psi.input_dim(),
                "output_dim": psi.output_dim(),
                "rank": s.rank(),
                "isometry_residual": isometry,
                "dilation_residual": residual,
            });
            match v_out {
                Some(path) => {
                    std::fs::write(&path, format_matrix(v)).map_err(|e| Failure::from(Error::from(e)))?;
                    summary["v_csv"] = json!(path.display().to_string());
                }
                None => {
                    let rows: Vec<Vec<String>> = (0..v.rows()).map(|i| complex_strings(&v.row(i))).collect();
                    summary["v"] = json!(rows);
                }
            }
            print_json(&summary)?;
            Ok(if residual < 1e-10 && isometry < 1e-12 {
                Outcome::Pass
            } else {
                Outcome::ResidualFailure
            })
        }
        CpCmd::Kernel { choi, s, t } => {
            let k = cp_kernel(&choi.load()?)?;
            let (s, t) = (parse_point(k.domain(), &s)?, parse_point(k.domain(), &t)?);
            emit(&format_matrix(&k.eval(&s, &t)?));
            Ok(Outcome::Pass)
        }
        CpCmd::Covderiv {
            choi,
            point,
            direction,
            f0,
        } => {
            let psi = choi.load()?;
            let k = cp_kernel(&psi)?;
            let u = parse_point(k.domain(), &point)?;
            let x = parse_direction(k.domain(), &u, &direction)?;
            let (n, m) = (psi.input_dim(), psi.output_dim());
            let f0 = match f0 {
                Some(text) => parse_vector(&text)?,
                None => vec![c64(1.0, 0.0); n],
            };
            if f0.len() != n {
                return Err(config_error(format!("f0 needs {n} entries, got {}", f0.len())));
            }
            let sigma = Section::new(move |p| {
                let u = p
                    .as_unitary()
                    .ok_or_else(|| Error::Precondition("expected a unitary point".into()))?;
                Ok(u.mat_vec(&f0)?[..m].to_vec())
            });
            let (BasePoint::Unitary(um), kernel_connect::kernels::TangentVector::AntiHermitian(a)) = (&u, &x) else {
                return Err(config_error("expected a unitary point and an anti-Hermitian direction"));
            };
            let formula = cp_covariant_derivative(&psi, &sigma, um, a)?;
            let generic = generic_cp_covariant_derivative(&psi, &sigma, um, a)?;
            let gap = vec_distance(&formula, &generic);
            print_json(&json!({
                "formula": complex_strings(&formula),
                "generic": complex_strings(&generic),
                "max_disagreement": gap,
            }))?;
            Ok(if gap < AGREEMENT_TOL {
                Outcome::Pass
            } else {
                Outcome::ResidualFailure
            })
        }
    }
}

fn verify_cmd(args: VerifyArgs) -> CmdResult {
    let opts = VerifyOptions {
        seed: args.seed,
        psd_tol: global_tolerance()?,
        fault: args.inject_fault,
    };
    let report = run_suite(args.suite, &opts);
    let text = serde_json::to_string_pretty(&report).map_err(|e| config_error(e.to_string()))?;
    emit(&format!("{text}\n"));
    if let Some(path) = args.out {
        std::fs::write(&path, format!("{text}\n")).map_err(|e| Failure::from(Error::from(e)))?;
    }
    Ok(report_outcome(&report))
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Kernel(c) => kernel_cmd(c),
        Command::Rkhs(c) => rkhs_cmd(c),
        Command::Connect(c) => connect_cmd(c),
        Command::Grassmann(c) => grassmann_cmd(c),
        Command::Cp(c) => cp_cmd(c),
        Command::Verify(a) => verify_cmd(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ResidualFailure) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
