//! Operator-valued reproducing kernels: evaluation, Gram matrices,
//! positivity certification, pull-backs and admissibility diagnostics.

mod builtin;
mod point;
mod spec;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

pub use builtin::{bergman_disk, bergman_halfplane, fock, fock_standard, rank_one_degenerate, DISK_HARD_LIMIT};
pub use point::{BasePoint, TangentVector};
pub use spec::{KernelSpec, KERNEL_SPEC_GRAMMAR};

use crate::connections::BundleMorphism;
use crate::error::{Error, Result};
use crate::numerics::{directional_derivative, hermitian_eigh, min_singular_value, ComplexMatrix, C64, DEFAULT_STEP};

/// Where a kernel's base points live.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Open unit disk in `ℂ`.
    Disk,
    /// Upper half-plane `Im z > 0`.
    HalfPlane,
    /// `ℂ^dim`.
    Complex { dim: usize },
    /// Unitary group `U(n)`.
    Unitary { n: usize },
    /// Grassmannian of rank-`rank` subspaces of `ℂ^n`.
    Grassmann { n: usize, rank: usize },
    /// Anything; no checks beyond what the kernel closure does.
    Unchecked,
}

impl Domain {
    pub fn check(&self, s: &BasePoint) -> Result<()> {
        match (self, s) {
            (Domain::Disk, BasePoint::Vector(v)) if v.len() == 1 => {
                let r = v[0].norm();
                if r >= DISK_HARD_LIMIT {
                    Err(Error::Domain(format!(
                        "|s| = {r} is outside the disk (limit {DISK_HARD_LIMIT})"
                    )))
                } else {
                    Ok(())
                }
            }
            (Domain::HalfPlane, BasePoint::Vector(v)) if v.len() == 1 => {
                if v[0].im > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("Im z = {} is not positive", v[0].im)))
                }
            }
            (Domain::Complex { dim }, BasePoint::Vector(v)) if v.len() == *dim => Ok(()),
            (Domain::Unitary { n }, BasePoint::Unitary(u)) if u.shape() == (*n, *n) => {
                let res = u.unitarity_residual();
                if res < 1e-10 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!("point is not unitary (residual {res:e})")))
                }
            }
            (Domain::Grassmann { n, rank }, BasePoint::Grass(p)) if p.dim() == *n && p.rank() == *rank => Ok(()),
            (Domain::Unchecked, _) => Ok(()),
            _ => Err(Error::Domain(format!("base point does not belong to {self:?}"))),
        }
    }

    /// Local length scale used to shrink finite-difference steps near a
    /// domain boundary.
    pub fn step_scale(&self, s: &BasePoint) -> f64 {
        match (self, s) {
            (Domain::Disk, BasePoint::Vector(v)) if !v.is_empty() => (1.0 - v[0].norm()).clamp(1e-6, 1.0),
            (Domain::HalfPlane, BasePoint::Vector(v)) if !v.is_empty() => v[0].im.clamp(1e-6, 1.0),
            _ => 1.0,
        }
    }
}

type EvalFn = dyn Fn(&BasePoint, &BasePoint) -> Result<ComplexMatrix> + Send + Sync;
type PartialFn = dyn Fn(&BasePoint, &BasePoint, &TangentVector) -> Result<ComplexMatrix> + Send + Sync;

/// An operator-valued kernel `κ(s, t)` with fiber `ℂ^M`.
///
/// The optional second-slot derivative gives `d/dε κ(s, γ(ε))` at `ε = 0`
/// for the canonical curve `γ` through `t` with velocity `X`.
#[derive(Clone)]
pub struct Kernel {
    name: String,
    fiber_dim: usize,
    domain: Domain,
    eval: Arc<EvalFn>,
    partial_second: Option<Arc<PartialFn>>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("name", &self.name)
            .field("fiber_dim", &self.fiber_dim)
            .field("domain", &self.domain)
            .field("analytic_partial", &self.partial_second.is_some())
            .finish()
    }
}

impl Kernel {
    pub fn new<F>(name: impl Into<String>, fiber_dim: usize, domain: Domain, eval: F) -> Self
    where
        F: Fn(&BasePoint, &BasePoint) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            fiber_dim,
            domain,
            eval: Arc::new(eval),
            partial_second: None,
        }
    }

    pub fn with_partial_second<F>(mut self, d2: F) -> Self
    where
        F: Fn(&BasePoint, &BasePoint, &TangentVector) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        self.partial_second = Some(Arc::new(d2));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_analytic_partial(&self) -> bool {
        self.partial_second.is_some()
    }

    /// Finite-difference step at `s`: the default step scaled by the local
    /// domain length scale.
    pub fn step_at(&self, s: &BasePoint) -> f64 {
        DEFAULT_STEP * self.domain.step_scale(s)
    }

    /// `κ(s, t)`.
    pub fn eval(&self, s: &BasePoint, t: &BasePoint) -> Result<ComplexMatrix> {
        self.domain.check(s)?;
        self.domain.check(t)?;
        let m = (self.eval)(s, t)?;
        if m.shape() != (self.fiber_dim, self.fiber_dim) {
            return Err(Error::DimensionMismatch(format!(
                "kernel `{}` returned {:?}, expected {}x{}",
                self.name,
                m.shape(),
                self.fiber_dim,
                self.fiber_dim
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite(format!("kernel `{}` value", self.name)));
        }
        Ok(m)
    }

    /// `∂₂κ(s, t)(X)`, analytic when available, otherwise by the stencil on
    /// `ε ↦ κ(s, γ(ε))`.
    pub fn partial_second(&self, s: &BasePoint, t: &BasePoint, x: &TangentVector) -> Result<ComplexMatrix> {
        match &self.partial_second {
            Some(d2) => {
                self.domain.check(s)?;
                self.domain.check(t)?;
                d2(s, t, x)
            }
            None => self.partial_second_numeric(s, t, x, self.step_at(t)),
        }
    }

    pub fn partial_second_numeric(
        &self,
        s: &BasePoint,
        t: &BasePoint,
        x: &TangentVector,
        h: f64,
    ) -> Result<ComplexMatrix> {
        let m = self.fiber_dim;
        let flat = directional_derivative(|eps| Ok(self.eval(s, &t.along(x, eps)?)?.data().to_vec()), h)?;
        ComplexMatrix::from_vec(m, m, flat)
    }
}

/// Block Gram matrix with block `(l, j)` equal to `κ(t_l, t_j)`.
pub fn gram_matrix(k: &Kernel, points: &[BasePoint]) -> Result<ComplexMatrix> {
    if points.is_empty() {
        return Err(Error::Precondition("gram matrix needs at least one point".into()));
    }
    let m = k.fiber_dim();
    let n = points.len();
    let mut g = ComplexMatrix::zeros(n * m, n * m);
    for (l, tl) in points.iter().enumerate() {
        for (j, tj) in points.iter().enumerate() {
            g.set_block(l * m, j * m, &k.eval(tl, tj)?);
        }
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PositivityCertificate {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

/// Certifies a Gram matrix as PSD when its smallest eigenvalue is at least
/// `−tol · max(1, λ_max)`.
pub fn positivity_certificate(g: &ComplexMatrix, tol: f64) -> Result<PositivityCertificate> {
    g.require_square()?;
    let residual = g.hermitian_residual();
    if residual > tol * g.norm().max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let eig = hermitian_eigh(g)?;
    let min = eig.min_value();
    let max = eig.max_value();
    Ok(PositivityCertificate {
        is_psd: min >= -tol * max.max(1.0),
        min_eigenvalue: min,
        max_eigenvalue: max,
    })
}

/// The kernel `Θ*κ̃(s, t) = δ_s* κ̃(ζ(s), ζ(t)) δ_t` on the source bundle.
pub fn pull_back_kernel(theta: &BundleMorphism, target: &Kernel) -> Result<Kernel> {
    if theta.target_fiber_dim() != target.fiber_dim() {
        return Err(Error::DimensionMismatch(format!(
            "morphism maps into fibers of dimension {}, kernel fiber is {}",
            theta.target_fiber_dim(),
            target.fiber_dim()
        )));
    }
    let theta = theta.clone();
    let target = target.clone();
    let name = format!("pullback({})", target.name());
    Ok(Kernel::new(
        name,
        theta.source_fiber_dim(),
        Domain::Unchecked,
        move |s, t| {
            let ds = theta.fiber(s)?;
            let dt = theta.fiber(t)?;
            let inner = target.eval(&theta.base(s)?, &theta.base(t)?)?;
            ds.adjoint().try_mul(&inner)?.try_mul(&dt)
        },
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// `min_s σ_min(κ(s, s))`.
    pub min_diagonal_singular_value: f64,
    /// `min_s min_{‖v‖=1} ‖K̂(s, v)‖²`, computed through the sampled Gram pairing.
    pub embedding_lower_bound: f64,
    /// `max_{s,t} ‖κ(s, t)* − κ(t, s)‖`.
    pub hermitian_symmetry_residual: f64,
}

/// Admissibility diagnostics on a finite sample.
///
/// The two lower bounds are computed by independent routes: singular values
/// of the diagonal kernel values, and the quadratic form of the Gram matrix
/// restricted to each fiber's embedded generators.
pub fn admissibility_report(k: &Kernel, points: &[BasePoint]) -> Result<AdmissibilityReport> {
    let g = gram_matrix(k, points)?;
    let m = k.fiber_dim();
    let n = points.len();

    let mut min_sigma = f64::INFINITY;
    for s in points {
        min_sigma = min_sigma.min(min_singular_value(&k.eval(s, s)?)?);
    }

    let mut min_embed = f64::INFINITY;
    for i in 0..n {
        // Pairing ⟨K̂(s_i, e_a), K̂(s_i, e_b)⟩ = e_b† G e_a.
        let generators: Vec<Vec<C64>> = (0..m)
            .map(|a| {
                let mut c = vec![C64::new(0.0, 0.0); n * m];
                c[i * m + a] = C64::new(1.0, 0.0);
                c
            })
            .collect();
        let images: Vec<Vec<C64>> = generators.iter().map(|c| g.mat_vec(c)).collect::<Result<_>>()?;
        let form = ComplexMatrix::from_fn(m, m, |b, a| crate::numerics::inner(&images[a], &generators[b]));
        min_embed = min_embed.min(hermitian_eigh(&form)?.min_value());
    }

    let mut herm = 0.0f64;
    for (l, s) in points.iter().enumerate() {
        for t in &points[l..] {
            let st = k.eval(s, t)?;
            let ts = k.eval(t, s)?;
            herm = herm.max((&st.adjoint() - &ts).norm());
        }
    }

    Ok(AdmissibilityReport {
        min_diagonal_singular_value: min_sigma,
        embedding_lower_bound: min_embed.max(0.0),
        hermitian_symmetry_residual: herm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    #[test]
    fn gram_of_single_point_is_diagonal_value() {
        let k = bergman_disk(2.0).unwrap();
        let t = BasePoint::scalar(c64(0.3, -0.2));
        let g = gram_matrix(&k, std::slice::from_ref(&t)).unwrap();
        assert_eq!(g, k.eval(&t, &t).unwrap());
    }

    #[test]
    fn bergman_gram_is_positive_definite() {
        let k = bergman_disk(2.0).unwrap();
        let pts: Vec<_> = [0.0, 0.5, -0.5]
            .iter()
            .map(|&x| BasePoint::scalar(c64(x, 0.0)))
            .collect();
        let g = gram_matrix(&k, &pts).unwrap();
        assert!(g.hermitian_residual() < 1e-14);
        let cert = positivity_certificate(&g, 1e-9).unwrap();
        assert!(cert.is_psd && cert.min_eigenvalue > 0.0);
    }

    #[test]
    fn positivity_certificate_examples() {
        let cert = positivity_certificate(&ComplexMatrix::identity(3), 1e-9).unwrap();
        assert!(cert.is_psd);
        assert!((cert.min_eigenvalue - 1.0).abs() < 1e-15);

        let cert = positivity_certificate(&ComplexMatrix::from_real_diag(&[1.0, -0.1]), 1e-9).unwrap();
        assert!(!cert.is_psd);
        assert!((cert.min_eigenvalue + 0.1).abs() < 1e-15);

        let skew = ComplexMatrix::from_rows(&[vec![c64(1.0, 0.0), c64(1.0, 0.0)], vec![c64(0.0, 0.0), c64(1.0, 0.0)]])
            .unwrap();
        assert!(matches!(
            positivity_certificate(&skew, 1e-9),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rank_one_kernel_is_not_admissible() {
        let k = rank_one_degenerate();
        let pts: Vec<_> = [0.0, 0.5, -0.25]
            .iter()
            .map(|&x| BasePoint::scalar(c64(x, 0.1)))
            .collect();
        let rep = admissibility_report(&k, &pts).unwrap();
        assert!(rep.min_diagonal_singular_value < 1e-8);
        assert!(rep.embedding_lower_bound < 1e-8);
        assert!(rep.hermitian_symmetry_residual < 1e-14);
    }

    #[test]
    fn bergman_admissibility_matches_formula() {
        let k = bergman_disk(2.0).unwrap();
        let mut pts = Vec::new();
        for i in -3..=3 {
            for j in -3..=3 {
                let z = c64(0.3 * i as f64, 0.3 * j as f64);
                if z.norm() <= 0.9 {
                    pts.push(BasePoint::scalar(z));
                }
            }
        }
        let rep = admissibility_report(&k, &pts).unwrap();
        // min over the grid of (1 − |s|²)^{-2} is attained at s = 0.
        assert!((rep.min_diagonal_singular_value - 1.0).abs() < 1e-12);
        assert!((rep.embedding_lower_bound - rep.min_diagonal_singular_value).abs() < 1e-8);
    }

    #[test]
    fn numeric_partial_matches_analytic() {
        let k = bergman_disk(2.0).unwrap();
        let s = BasePoint::scalar(c64(0.3, 0.1));
        let t = BasePoint::scalar(c64(-0.2, 0.4));
        let x = TangentVector::scalar(c64(0.7, -0.3));
        let a = k.partial_second(&s, &t, &x).unwrap();
        let n = k.partial_second_numeric(&s, &t, &x, 1e-3).unwrap();
        assert!((&a - &n).norm() < 1e-10);
    }
}
