use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{bergman_disk, bergman_halfplane, fock_standard, Kernel};
use crate::cpmaps::{cp_kernel, CpMap};
use crate::error::{Error, Result};
use crate::grassmann::universal_kernel;
use crate::numerics::csv::read_matrix;

pub const KERNEL_SPEC_GRAMMAR: &str = "accepted kernel specs: \
bergman-disk:nu=<real >= 1> | bergman-halfplane:nu=<real >= 1> | fock:dim=<n >= 1> | \
universal:n=<n >= 1>[,k=<rank, default 1>] | cp:<choi-file.csv>";

/// Parsed form of a kernel spec string such as `bergman-disk:nu=2`.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    BergmanDisk { nu: f64 },
    BergmanHalfPlane { nu: f64 },
    Fock { dim: usize },
    Universal { n: usize, k: usize },
    Cp { choi: PathBuf },
}

fn grammar_error(msg: impl fmt::Display) -> Error {
    Error::Parse(format!("{msg}; {KERNEL_SPEC_GRAMMAR}"))
}

fn parse_params(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| grammar_error(format!("malformed parameter `{kv}`")))
        })
        .collect()
}

fn only_param<'a>(params: &[(&'a str, &'a str)], key: &str) -> Result<&'a str> {
    match params {
        [(k, v)] if *k == key => Ok(v),
        _ => Err(grammar_error(format!("expected exactly `{key}=<value>`"))),
    }
}

fn parse_nu(v: &str) -> Result<f64> {
    let nu: f64 = v.parse().map_err(|_| grammar_error(format!("invalid nu `{v}`")))?;
    if !(nu.is_finite() && nu >= 1.0) {
        return Err(grammar_error(format!("nu must be >= 1, got {v}")));
    }
    Ok(nu)
}

fn parse_count(key: &str, v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(grammar_error(format!("{key} must be a positive integer, got `{v}`"))),
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, body) = s
            .split_once(':')
            .ok_or_else(|| grammar_error(format!("missing `:` in kernel spec `{s}`")))?;
        match family.trim() {
            "bergman-disk" => Ok(KernelSpec::BergmanDisk {
                nu: parse_nu(only_param(&parse_params(body)?, "nu")?)?,
            }),
            "bergman-halfplane" => Ok(KernelSpec::BergmanHalfPlane {
                nu: parse_nu(only_param(&parse_params(body)?, "nu")?)?,
            }),
            "fock" => Ok(KernelSpec::Fock {
                dim: parse_count("dim", only_param(&parse_params(body)?, "dim")?)?,
            }),
            "universal" => {
                let params = parse_params(body)?;
                let mut n = None;
                let mut k = 1;
                for (key, v) in params {
                    match key {
                        "n" => n = Some(parse_count("n", v)?),
                        "k" => k = parse_count("k", v)?,
                        other => return Err(grammar_error(format!("unknown parameter `{other}`"))),
                    }
                }
                let n = n.ok_or_else(|| grammar_error("universal kernel needs `n`"))?;
                if k > n {
                    return Err(grammar_error(format!("rank k={k} exceeds n={n}")));
                }
                Ok(KernelSpec::Universal { n, k })
            }
            "cp" => {
                if body.trim().is_empty() {
                    return Err(grammar_error("cp kernel needs a Choi matrix file"));
                }
                Ok(KernelSpec::Cp {
                    choi: PathBuf::from(body.trim()),
                })
            }
            other => Err(grammar_error(format!("unknown kernel family `{other}`"))),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::BergmanDisk { nu } => write!(f, "bergman-disk:nu={nu}"),
            KernelSpec::BergmanHalfPlane { nu } => write!(f, "bergman-halfplane:nu={nu}"),
            KernelSpec::Fock { dim } => write!(f, "fock:dim={dim}"),
            KernelSpec::Universal { n, k } => write!(f, "universal:n={n},k={k}"),
            KernelSpec::Cp { choi } => write!(f, "cp:{}", choi.display()),
        }
    }
}

impl KernelSpec {
    /// Builds the kernel. `cp` specs read the Choi file and infer the input
    /// dimension from unitality.
    pub fn build(&self) -> Result<Kernel> {
        match self {
            KernelSpec::BergmanDisk { nu } => bergman_disk(*nu),
            KernelSpec::BergmanHalfPlane { nu } => bergman_halfplane(*nu),
            KernelSpec::Fock { dim } => fock_standard(*dim),
            KernelSpec::Universal { n, k } => universal_kernel(*n, *k),
            KernelSpec::Cp { choi } => {
                let map = CpMap::from_choi_inferred(read_matrix(choi)?, None)?;
                cp_kernel(&map)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_documented_forms() {
        assert_eq!(
            "bergman-disk:nu=2".parse::<KernelSpec>().unwrap(),
            KernelSpec::BergmanDisk { nu: 2.0 }
        );
        assert_eq!(
            "bergman-halfplane:nu=1".parse::<KernelSpec>().unwrap(),
            KernelSpec::BergmanHalfPlane { nu: 1.0 }
        );
        assert_eq!("fock:dim=3".parse::<KernelSpec>().unwrap(), KernelSpec::Fock { dim: 3 });
        assert_eq!(
            "universal:n=4".parse::<KernelSpec>().unwrap(),
            KernelSpec::Universal { n: 4, k: 1 }
        );
        assert_eq!(
            "cp:data/choi.csv".parse::<KernelSpec>().unwrap(),
            KernelSpec::Cp {
                choi: PathBuf::from("data/choi.csv")
            }
        );
    }

    #[test]
    fn errors_list_the_grammar() {
        for bad in [
            "bogus:x=1",
            "bergman-disk",
            "bergman-disk:nu=0.5",
            "fock:dim=0",
            "universal:n=2,k=3",
            "cp:",
        ] {
            match bad.parse::<KernelSpec>() {
                Err(Error::Parse(msg)) => assert!(msg.contains("accepted kernel specs"), "{bad}: {msg}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
    }

    proptest! {
        #[test]
        fn canonical_string_round_trips(nu in 1.0f64..20.0, dim in 1usize..8, n in 1usize..8) {
            let specs = [
                KernelSpec::BergmanDisk { nu },
                KernelSpec::BergmanHalfPlane { nu },
                KernelSpec::Fock { dim },
                KernelSpec::Universal { n, k: 1 + (dim - 1) % n },
            ];
            for spec in specs {
                let back: KernelSpec = spec.to_string().parse().unwrap();
                prop_assert_eq!(back, spec);
            }
        }
    }
}
