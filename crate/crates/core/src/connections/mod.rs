//! Kernel-induced connections on trivialized bundles.
//!
//! Three interchangeable evaluators of `∇σ(X)` at `s`:
//!
//! * closed form, `dσ(X) + α(X)σ(s)` with `α(X) = κ(s,s)⁻¹ ∂₂κ(s,s)(X)`;
//! * direct, `κ(s,s)⁻¹ d/dt κ(s, γ(t)) σ(γ(t))` at `t = 0`;
//! * sampled, the same derivative taken in a sampled `H^K` and pushed
//!   through the fiber projection at `s`.
//!
//! The direct evaluator is the reference; the others are checked against it.

mod morphism;
mod section;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use morphism::BundleMorphism;
pub use section::{Curve, ScalarFunction, Section, DIFFERENTIAL_MISMATCH_TOL};

use crate::error::{Error, Result};
use crate::kernels::{BasePoint, Domain, Kernel, TangentVector};
use crate::numerics::diff::STENCIL;
use crate::numerics::{directional_derivative, inverse, vec_distance, vec_norm, ComplexMatrix, C64, DEFAULT_STEP};
use crate::rkhs::{build_rkhs, SampledRkhs};

/// `α_s` for a kernel at a fixed point.
#[derive(Clone, Debug)]
pub struct ConnectionForm {
    kernel: Kernel,
    point: BasePoint,
    kss_inv: ComplexMatrix,
}

/// `α_s(X) = κ(s,s)⁻¹ ∂₂κ(s,s)(X)`.
pub fn connection_form(k: &Kernel, s: &BasePoint) -> Result<ConnectionForm> {
    let kss_inv = inverse(&k.eval(s, s)?)?;
    Ok(ConnectionForm {
        kernel: k.clone(),
        point: s.clone(),
        kss_inv,
    })
}

impl ConnectionForm {
    pub fn point(&self) -> &BasePoint {
        &self.point
    }

    pub fn apply(&self, x: &TangentVector) -> Result<ComplexMatrix> {
        self.kss_inv
            .try_mul(&self.kernel.partial_second(&self.point, &self.point, x)?)
    }
}

/// Stencil step for differentiating along `X` at `s`: the kernel's local
/// step, shortened for long directions.
pub fn step_for(k: &Kernel, s: &BasePoint, x: &TangentVector) -> f64 {
    k.step_at(s) / x.norm().max(1.0)
}

fn add_into(acc: &mut [C64], v: &[C64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// `dσ(X) + α(X)σ(s)`.
pub fn covariant_derivative_closed(k: &Kernel, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>> {
    let mut out = sigma.differential(s, x, step_for(k, s, x))?;
    let alpha = connection_form(k, s)?.apply(x)?;
    add_into(&mut out, &alpha.mat_vec(&sigma.value(s)?)?);
    Ok(out)
}

/// `κ(s,s)⁻¹ d/dt|₀ κ(s, γ(t)) σ(γ(t))` with the default local step.
pub fn covariant_derivative_direct(k: &Kernel, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>> {
    covariant_derivative_direct_with_step(k, sigma, s, x, step_for(k, s, x))
}

pub fn covariant_derivative_direct_with_step(
    k: &Kernel,
    sigma: &Section,
    s: &BasePoint,
    x: &TangentVector,
    h: f64,
) -> Result<Vec<C64>> {
    let kss_inv = inverse(&k.eval(s, s)?)?;
    let d = directional_derivative(
        |eps| {
            let t = s.along(x, eps)?;
            k.eval(s, &t)?.mat_vec(&sigma.value(&t)?)
        },
        h,
    )?;
    kss_inv.mat_vec(&d)
}

/// `s` followed by the stencil points `γ(jh)`, `j ∈ {−2, −1, 1, 2}`.
pub fn stencil_points(s: &BasePoint, x: &TangentVector, h: f64) -> Result<Vec<BasePoint>> {
    let mut pts = vec![s.clone()];
    for (offset, _) in STENCIL {
        pts.push(s.along(x, offset * h)?);
    }
    Ok(pts)
}

/// The derivative of `t ↦ K̂(σ(γ(t)))` taken in the sampled space by the
/// stencil, projected onto the fiber at `s`, evaluated at `s` and mapped back
/// through `κ(s,s)⁻¹`.
pub fn covariant_derivative_sampled(
    r: &SampledRkhs,
    sigma: &Section,
    s: &BasePoint,
    x: &TangentVector,
    h: f64,
) -> Result<Vec<C64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("step must be positive, got {h}")));
    }
    let mut d = r.zero();
    for (offset, weight) in STENCIL {
        let t = s.along(x, offset * h)?;
        if r.index_of(&t).is_none() {
            return Err(Error::Precondition(format!(
                "stencil point at offset {offset}h is missing from the sample"
            )));
        }
        let f = r.embed(&t, &sigma.value(&t)?)?;
        d = d.add(&f.scale(C64::new(weight / h, 0.0)))?;
    }
    let projected = r.project_fiber(s, &d)?;
    let at_s = r.evaluate(&projected, s)?;
    inverse(&r.kernel().eval(s, s)?)?.mat_vec(&at_s)
}

/// Which formula a [`ConnectionEvaluator`] uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    ClosedForm,
    Direct,
    Sampled,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::ClosedForm, Backend::Direct, Backend::Sampled];

    pub fn name(self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed",
            Backend::Direct => "direct",
            Backend::Sampled => "sampled",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Anything that evaluates `∇σ(X)` at a point.
pub trait CovariantDerivative {
    fn covariant_derivative(&self, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>>;
}

impl<F> CovariantDerivative for F
where
    F: Fn(&Section, &BasePoint, &TangentVector) -> Result<Vec<C64>>,
{
    fn covariant_derivative(&self, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>> {
        self(sigma, s, x)
    }
}

/// The connection of a kernel, evaluated through one backend.
#[derive(Clone, Debug)]
pub struct ConnectionEvaluator {
    kernel: Kernel,
    backend: Backend,
    step: Option<f64>,
}

impl ConnectionEvaluator {
    pub fn new(kernel: &Kernel, backend: Backend) -> Self {
        Self {
            kernel: kernel.clone(),
            backend,
            step: None,
        }
    }

    /// Fixes the stencil step instead of the local default.
    pub fn with_step(mut self, h: f64) -> Self {
        self.step = Some(h);
        self
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }
}

impl CovariantDerivative for ConnectionEvaluator {
    fn covariant_derivative(&self, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>> {
        let h = self.step.unwrap_or_else(|| step_for(&self.kernel, s, x));
        match self.backend {
            Backend::ClosedForm => {
                let mut out = sigma.differential(s, x, h)?;
                let alpha = connection_form(&self.kernel, s)?.apply(x)?;
                add_into(&mut out, &alpha.mat_vec(&sigma.value(s)?)?);
                Ok(out)
            }
            Backend::Direct => covariant_derivative_direct_with_step(&self.kernel, sigma, s, x, h),
            Backend::Sampled => {
                if x.norm() == 0.0 {
                    return Ok(vec![C64::new(0.0, 0.0); self.kernel.fiber_dim()]);
                }
                let r = build_rkhs(&self.kernel, stencil_points(s, x, h)?, 0.0)?;
                covariant_derivative_sampled(&r, sigma, s, x, h)
            }
        }
    }
}

/// Integrates `v̇ = −α_{γ(t)}(γ̇(t)) v` on `[0, 1]` with the classical
/// fourth-order Runge-Kutta scheme and `steps` equal steps.
pub fn parallel_transport(k: &Kernel, gamma: &Curve, v0: &[C64], steps: usize) -> Result<Vec<C64>> {
    if steps < 1 {
        return Err(Error::Precondition("transport needs at least one step".into()));
    }
    if v0.len() != k.fiber_dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial vector has length {}, fiber is {}",
            v0.len(),
            k.fiber_dim()
        )));
    }
    let rhs = |t: f64, v: &[C64]| -> Result<Vec<C64>> {
        let alpha = connection_form(k, &gamma.point(t)?)?.apply(&gamma.velocity(t)?)?;
        Ok(alpha.mat_vec(v)?.into_iter().map(|z| -z).collect())
    };
    let axpy = |v: &[C64], a: f64, d: &[C64]| -> Vec<C64> { v.iter().zip(d).map(|(x, y)| x + y * a).collect() };
    let h = 1.0 / steps as f64;
    let mut v = v0.to_vec();
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(t, &v)?;
        let k2 = rhs(t + 0.5 * h, &axpy(&v, 0.5 * h, &k1))?;
        let k3 = rhs(t + 0.5 * h, &axpy(&v, 0.5 * h, &k2))?;
        let k4 = rhs(t + h, &axpy(&v, h, &k3))?;
        for j in 0..v.len() {
            v[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("transported vector".into()));
    }
    Ok(v)
}

const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Transport of a scalar fiber in closed form, `v(1) = exp(−∫₀¹ α_{γ(t)}(γ̇(t)) dt) v₀`,
/// with the integral computed by composite five-point Gauss-Legendre.
pub fn scalar_transport_quadrature(k: &Kernel, gamma: &Curve, v0: C64, panels: usize) -> Result<C64> {
    if k.fiber_dim() != 1 {
        return Err(Error::Precondition("quadrature transport needs a scalar fiber".into()));
    }
    if panels < 1 {
        return Err(Error::Precondition("quadrature needs at least one panel".into()));
    }
    let width = 1.0 / panels as f64;
    let mut integral = C64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * width;
        for (node, weight) in GAUSS_LEGENDRE_5 {
            let t = mid + 0.5 * width * node;
            let alpha = connection_form(k, &gamma.point(t)?)?.apply(&gamma.velocity(t)?)?;
            integral += alpha[(0, 0)] * (0.5 * width * weight);
        }
    }
    Ok((-integral).exp() * v0)
}

/// One row of a transport convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportRow {
    pub steps: usize,
    pub value: Vec<C64>,
    pub error: f64,
    /// `log₂(e_prev / e)` against the previous row, when the step count doubled.
    pub order: Option<f64>,
}

pub fn transport_convergence(
    k: &Kernel,
    gamma: &Curve,
    v0: &[C64],
    steps: &[usize],
    reference: &[C64],
) -> Result<Vec<TransportRow>> {
    let mut rows: Vec<TransportRow> = Vec::with_capacity(steps.len());
    for &n in steps {
        let value = parallel_transport(k, gamma, v0, n)?;
        let error = vec_distance(&value, reference);
        let order = rows.last().and_then(|prev| {
            (prev.steps * 2 == n && error > 0.0 && prev.error > 0.0).then(|| (prev.error / error).log2())
        });
        rows.push(TransportRow {
            steps: n,
            value,
            error,
            order,
        });
    }
    Ok(rows)
}

/// `max ‖∇(fσ)(X) − df(X) σ(s) − f(s) ∇σ(X)‖` over the probes.
pub fn leibniz_residual(
    nabla: &dyn CovariantDerivative,
    f: &ScalarFunction,
    sigma: &Section,
    probes: &[(BasePoint, TangentVector)],
    h: f64,
) -> Result<f64> {
    let f_sigma = sigma.scaled_by(f);
    let mut worst = 0.0f64;
    for (s, x) in probes {
        let lhs = nabla.covariant_derivative(&f_sigma, s, x)?;
        let df = f.differential(s, x, h)?;
        let fs = f.value(s)?;
        let value = sigma.value(s)?;
        let nab = nabla.covariant_derivative(sigma, s, x)?;
        let rhs: Vec<C64> = value.iter().zip(&nab).map(|(v, n)| df * v + fs * n).collect();
        worst = worst.max(vec_distance(&lhs, &rhs));
    }
    Ok(worst)
}

type FormFn = dyn Fn(&BasePoint, &TangentVector) -> Result<ComplexMatrix> + Send + Sync;

/// A connection given by its form field `(s, X) ↦ α_s(X)` on a trivial bundle.
#[derive(Clone)]
pub struct ConnectionFormField {
    fiber_dim: usize,
    domain: Domain,
    form: Arc<FormFn>,
}

impl fmt::Debug for ConnectionFormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionFormField")
            .field("fiber_dim", &self.fiber_dim)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ConnectionFormField {
    pub fn new<F>(fiber_dim: usize, form: F) -> Self
    where
        F: Fn(&BasePoint, &TangentVector) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        Self {
            fiber_dim,
            domain: Domain::Unchecked,
            form: Arc::new(form),
        }
    }

    /// Uses the domain's local length scale for differentiation steps.
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn zero(fiber_dim: usize) -> Self {
        Self::new(fiber_dim, move |_, _| Ok(ComplexMatrix::zeros(fiber_dim, fiber_dim)))
    }

    pub fn from_kernel(k: &Kernel) -> Self {
        let kernel = k.clone();
        Self::new(k.fiber_dim(), move |s, x| connection_form(&kernel, s)?.apply(x)).with_domain(k.domain().clone())
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn eval(&self, s: &BasePoint, x: &TangentVector) -> Result<ComplexMatrix> {
        let a = (self.form)(s, x)?;
        if a.shape() != (self.fiber_dim, self.fiber_dim) {
            return Err(Error::DimensionMismatch(format!(
                "connection form has shape {:?}, fiber is {}",
                a.shape(),
                self.fiber_dim
            )));
        }
        Ok(a)
    }
}

impl CovariantDerivative for ConnectionFormField {
    fn covariant_derivative(&self, sigma: &Section, s: &BasePoint, x: &TangentVector) -> Result<Vec<C64>> {
        let h = DEFAULT_STEP * self.domain.step_scale(s) / x.norm().max(1.0);
        let mut out = sigma.differential(s, x, h)?;
        add_into(&mut out, &self.eval(s, x)?.mat_vec(&sigma.value(s)?)?);
        Ok(out)
    }
}

/// Pull-back of a connection along a morphism with invertible fiber maps:
/// `α_s(X) = δ_s⁻¹ α̃_{ζ(s)}(Tζ X) δ_s + δ_s⁻¹ dδ(X)`.
pub fn gauge_pullback_connection(theta: &BundleMorphism, target: &ConnectionFormField) -> Result<ConnectionFormField> {
    if theta.target_fiber_dim() != target.fiber_dim() {
        return Err(Error::DimensionMismatch(format!(
            "morphism maps into fibers of dimension {}, connection fiber is {}",
            theta.target_fiber_dim(),
            target.fiber_dim()
        )));
    }
    if theta.source_fiber_dim() != theta.target_fiber_dim() {
        return Err(Error::Precondition(
            "pull-back of a connection needs invertible fiber maps".into(),
        ));
    }
    let (theta, target) = (theta.clone(), target.clone());
    Ok(ConnectionFormField::new(theta.source_fiber_dim(), move |s, x| {
        let delta = theta.fiber(s)?;
        let delta_inv = inverse(&delta)?;
        let zs = theta.base(s)?;
        let tx = theta.tangent(s, x)?;
        let conj = delta_inv.try_mul(&target.eval(&zs, &tx)?)?.try_mul(&delta)?;
        let dd = theta.fiber_derivative(s, x, DEFAULT_STEP / x.norm().max(1.0))?;
        conj.try_add(&delta_inv.try_mul(&dd)?)
    }))
}

/// Tolerance for the section compatibility `δ ∘ σ = σ̃ ∘ ζ`.
pub const SECTION_COMPATIBILITY_TOL: f64 = 1e-10;

/// `max ‖δ_s ∇σ(s, X) − ∇̃σ̃(ζ(s), Tζ X)‖` over the probes, after checking
/// that the sections correspond under the morphism.
pub fn intertwining_residual(
    theta: &BundleMorphism,
    nabla: &dyn CovariantDerivative,
    nabla_target: &dyn CovariantDerivative,
    sigma: &Section,
    sigma_target: &Section,
    probes: &[(BasePoint, TangentVector)],
) -> Result<f64> {
    for (s, _) in probes {
        let lhs = theta.fiber(s)?.mat_vec(&sigma.value(s)?)?;
        let rhs = sigma_target.value(&theta.base(s)?)?;
        let gap = vec_distance(&lhs, &rhs);
        if gap > SECTION_COMPATIBILITY_TOL * vec_norm(&rhs).max(1.0) {
            return Err(Error::Precondition(format!(
                "sections do not correspond under the morphism (gap {gap:e})"
            )));
        }
    }
    let mut worst = 0.0f64;
    for (s, x) in probes {
        let lhs = theta.fiber(s)?.mat_vec(&nabla.covariant_derivative(sigma, s, x)?)?;
        let rhs = nabla_target.covariant_derivative(sigma_target, &theta.base(s)?, &theta.tangent(s, x)?)?;
        worst = worst.max(vec_distance(&lhs, &rhs));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
