//! Finite-sample realization of the Hilbert space `H^K` of a kernel.
//!
//! Elements are coefficient vectors `c` representing `f = Σ_i κ(·, t_i) c_i`
//! over the sample points, paired through the block Gram matrix.

use std::ptr;

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, positivity_certificate, BasePoint, Kernel, PositivityCertificate};
use crate::numerics::{inner, inverse, pinv_threshold, ComplexMatrix, C64, DEFAULT_TOL};

/// Relative eigenvalue threshold for the Gram pseudo-inverse.
pub const PINV_THRESHOLD: f64 = 1e-10;
/// Sample points closer than this are duplicates.
pub const DUPLICATE_DISTANCE: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct SampledRkhs {
    kernel: Kernel,
    points: Vec<BasePoint>,
    gram: ComplexMatrix,
    gram_pinv: ComplexMatrix,
    ridge: f64,
    certificate: PositivityCertificate,
}

/// An element of a [`SampledRkhs`], tied to the space that produced it.
#[derive(Clone, Debug)]
pub struct RkhsElement<'a> {
    owner: &'a SampledRkhs,
    coefficients: Vec<C64>,
}

/// Assembles the Gram matrix, certifies positivity and computes the
/// thresholded pseudo-inverse of `G + εI`.
pub fn build_rkhs(kernel: &Kernel, points: Vec<BasePoint>, ridge: f64) -> Result<SampledRkhs> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Precondition(format!(
            "ridge must be a finite non-negative number, got {ridge}"
        )));
    }
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            if a.distance(b) < DUPLICATE_DISTANCE {
                return Err(Error::Precondition(format!("sample points {i} and {j} coincide")));
            }
        }
    }
    let gram = gram_matrix(kernel, &points)?;
    let certificate = positivity_certificate(&gram, DEFAULT_TOL)?;
    if !certificate.is_psd {
        return Err(Error::NotPsd {
            min_eigenvalue: certificate.min_eigenvalue,
        });
    }
    let regularized = &gram + &ComplexMatrix::identity(gram.rows()).scale_real(ridge);
    let gram_pinv = pinv_threshold(&regularized, PINV_THRESHOLD)?;
    Ok(SampledRkhs {
        kernel: kernel.clone(),
        points,
        gram,
        gram_pinv,
        ridge,
        certificate,
    })
}

impl SampledRkhs {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn points(&self) -> &[BasePoint] {
        &self.points
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn gram_pinv(&self) -> &ComplexMatrix {
        &self.gram_pinv
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn certificate(&self) -> &PositivityCertificate {
        &self.certificate
    }

    pub fn fiber_dim(&self) -> usize {
        self.kernel.fiber_dim()
    }

    /// Length of coefficient vectors.
    pub fn dim(&self) -> usize {
        self.points.len() * self.fiber_dim()
    }

    pub fn index_of(&self, s: &BasePoint) -> Option<usize> {
        self.points.iter().position(|p| p.distance(s) < DUPLICATE_DISTANCE)
    }

    fn require_index(&self, s: &BasePoint) -> Result<usize> {
        self.index_of(s)
            .ok_or_else(|| Error::Precondition("point is not among the sample points".into()))
    }

    fn check_owner(&self, f: &RkhsElement<'_>) -> Result<()> {
        if ptr::eq(self, f.owner) {
            Ok(())
        } else {
            Err(Error::Precondition(
                "element belongs to a different sampled space".into(),
            ))
        }
    }

    pub fn zero(&self) -> RkhsElement<'_> {
        RkhsElement {
            owner: self,
            coefficients: vec![C64::new(0.0, 0.0); self.dim()],
        }
    }

    pub fn element(&self, coefficients: Vec<C64>) -> Result<RkhsElement<'_>> {
        if coefficients.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                self.dim(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("element coefficients".into()));
        }
        Ok(RkhsElement {
            owner: self,
            coefficients,
        })
    }

    /// `K̂(s, v) = κ(·, s) v`.
    pub fn embed(&self, s: &BasePoint, v: &[C64]) -> Result<RkhsElement<'_>> {
        let m = self.fiber_dim();
        if v.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "fiber vector has length {}, expected {m}",
                v.len()
            )));
        }
        let i = self.require_index(s)?;
        let mut f = self.zero();
        f.coefficients[i * m..(i + 1) * m].copy_from_slice(v);
        Ok(f)
    }

    /// `⟨f, g⟩ = g† G f`.
    pub fn inner(&self, f: &RkhsElement<'_>, g: &RkhsElement<'_>) -> Result<C64> {
        self.check_owner(f)?;
        self.check_owner(g)?;
        Ok(inner(&self.gram.mat_vec(&f.coefficients)?, &g.coefficients))
    }

    /// `f(s) = Σ_i κ(s, t_i) c_i` at any point of the kernel's domain.
    pub fn evaluate(&self, f: &RkhsElement<'_>, s: &BasePoint) -> Result<Vec<C64>> {
        self.check_owner(f)?;
        let m = self.fiber_dim();
        let mut out = vec![C64::new(0.0, 0.0); m];
        for (i, t) in self.points.iter().enumerate() {
            let block = &f.coefficients[i * m..(i + 1) * m];
            if block.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                continue;
            }
            let kv = self.kernel.eval(s, t)?.mat_vec(block)?;
            for (o, x) in out.iter_mut().zip(kv) {
                *o += x;
            }
        }
        Ok(out)
    }

    /// Orthogonal projection onto the fiber `K̂(s, ℂ^M)`: coefficients
    /// `κ(s, s)⁻¹ f(s)` in the block of `s`.
    pub fn project_fiber<'a>(&'a self, s: &BasePoint, f: &RkhsElement<'a>) -> Result<RkhsElement<'a>> {
        self.check_owner(f)?;
        let kss_inv = inverse(&self.kernel.eval(s, s)?)?;
        let c = kss_inv.mat_vec(&self.evaluate(f, s)?)?;
        self.embed(s, &c)
    }

    /// Largest deviation of `⟨P_s K̂(t, v), K̂(s, w)⟩` from `(κ(s, t) v | w)`
    /// over sample pairs and fiber basis vectors.
    pub fn universality_residual(&self) -> Result<f64> {
        let m = self.fiber_dim();
        let basis: Vec<Vec<C64>> = (0..m)
            .map(|a| (0..m).map(|b| C64::new(if a == b { 1.0 } else { 0.0 }, 0.0)).collect())
            .collect();
        let mut worst = 0.0f64;
        for s in &self.points {
            for t in &self.points {
                let kst = self.kernel.eval(s, t)?;
                for v in &basis {
                    let projected = self.project_fiber(s, &self.embed(t, v)?)?;
                    let kv = kst.mat_vec(v)?;
                    for w in &basis {
                        let lhs = inner(&kv, w);
                        let rhs = self.inner(&projected, &self.embed(s, w)?)?;
                        worst = worst.max((lhs - rhs).norm());
                    }
                }
            }
        }
        Ok(worst)
    }
}

impl<'a> RkhsElement<'a> {
    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn owner(&self) -> &'a SampledRkhs {
        self.owner
    }

    pub fn scale(&self, factor: C64) -> RkhsElement<'a> {
        RkhsElement {
            owner: self.owner,
            coefficients: self.coefficients.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &RkhsElement<'a>) -> Result<RkhsElement<'a>> {
        if !ptr::eq(self.owner, other.owner) {
            return Err(Error::Precondition(
                "cannot add elements of different sampled spaces".into(),
            ));
        }
        Ok(RkhsElement {
            owner: self.owner,
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{bergman_disk, fock_standard};
    use crate::numerics::c64;
    use crate::random::{gaussian_vector, seeded_rng};

    fn disk_points(xs: &[(f64, f64)]) -> Vec<BasePoint> {
        xs.iter().map(|&(a, b)| BasePoint::scalar(c64(a, b))).collect()
    }

    fn grid() -> Vec<BasePoint> {
        disk_points(&[(0.0, 0.0), (0.5, 0.0), (-0.5, 0.1), (0.2, 0.6), (-0.3, -0.7)])
    }

    #[test]
    fn single_point_gram_and_duplicates() {
        let k = bergman_disk(2.0).unwrap();
        let t = BasePoint::scalar(c64(0.3, 0.0));
        let r = build_rkhs(&k, vec![t.clone()], 0.0).unwrap();
        assert_eq!(r.gram(), &k.eval(&t, &t).unwrap());
        assert!(build_rkhs(&k, vec![t.clone(), t], 0.0).is_err());
    }

    #[test]
    fn embedding_and_inner_product() {
        let k = bergman_disk(1.0).unwrap();
        let r = build_rkhs(&k, disk_points(&[(0.0, 0.0), (0.5, 0.0)]), 0.0).unwrap();
        let one = [c64(1.0, 0.0)];
        let f = r.embed(&r.points()[0], &one).unwrap();
        let g = r.embed(&r.points()[1], &one).unwrap();
        assert_eq!(r.inner(&f, &g).unwrap(), c64(1.0, 0.0));
        let self_inner = r.inner(&f, &f).unwrap();
        assert_eq!(self_inner, k.eval(&r.points()[0], &r.points()[0]).unwrap()[(0, 0)]);
        assert!(r.embed(&BasePoint::scalar(c64(0.9, 0.0)), &one).is_err());
    }

    #[test]
    fn block_indexing_for_operator_kernels() {
        let k = crate::grassmann::universal_kernel(3, 2).unwrap();
        let pts: Vec<_> = (0..3)
            .map(|seed| {
                let u = crate::random::random_unitary(3, seed);
                BasePoint::Grass(
                    crate::grassmann::HermitianProjector::coordinate(3, 2)
                        .unwrap()
                        .conjugated(&u)
                        .unwrap(),
                )
            })
            .collect();
        let r = build_rkhs(&k, pts, 0.0).unwrap();
        let f = r.embed(&r.points()[2], &[c64(0.0, 0.0), c64(1.0, 0.0)]).unwrap();
        let nonzero: Vec<usize> = (0..r.dim()).filter(|&i| f.coefficients()[i] != c64(0.0, 0.0)).collect();
        assert_eq!(nonzero, vec![5]);
    }

    #[test]
    fn reproducing_property_and_projection() {
        let k = bergman_disk(2.0).unwrap();
        let r = build_rkhs(&k, grid(), 0.0).unwrap();
        let mut rng = seeded_rng(3);
        for _ in 0..10 {
            let f = r.element(gaussian_vector(&mut rng, r.dim())).unwrap();
            let g = r.element(gaussian_vector(&mut rng, r.dim())).unwrap();
            assert!(r.inner(&f, &f).unwrap().re >= -1e-12);
            for s in r.points() {
                let v = [c64(0.3, -1.2)];
                let lhs = r.inner(&f, &r.embed(s, &v).unwrap()).unwrap();
                let rhs = inner(&r.evaluate(&f, s).unwrap(), &v);
                assert!((lhs - rhs).norm() < 1e-10);

                let pf = r.project_fiber(s, &f).unwrap();
                let ppf = r.project_fiber(s, &pf).unwrap();
                let idem = pf.add(&ppf.scale(c64(-1.0, 0.0))).unwrap();
                assert!(idem.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
                let pg = r.project_fiber(s, &g).unwrap();
                let adj = r.inner(&pf, &g).unwrap() - r.inner(&f, &pg).unwrap();
                assert!(adj.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn universality_on_builtins() {
        let k = bergman_disk(2.0).unwrap();
        let pts = disk_points(&[
            (0.0, 0.0),
            (0.5, 0.0),
            (-0.5, 0.0),
            (0.0, 0.5),
            (0.0, -0.5),
            (0.3, 0.3),
            (-0.3, 0.3),
            (0.6, -0.6),
        ]);
        let r = build_rkhs(&k, pts, 0.0).unwrap();
        assert!(r.universality_residual().unwrap() < 1e-9);

        let k = fock_standard(2).unwrap();
        let mut rng = seeded_rng(5);
        let pts = (0..6)
            .map(|_| BasePoint::Vector(gaussian_vector(&mut rng, 2)))
            .collect();
        let r = build_rkhs(&k, pts, 0.0).unwrap();
        assert!(r.universality_residual().unwrap() < 1e-9);
    }

    #[test]
    fn orthogonal_fibers_project_to_zero() {
        let k = crate::grassmann::universal_kernel(2, 1).unwrap();
        let e1 = crate::grassmann::HermitianProjector::coordinate(2, 1).unwrap();
        let e2 = crate::grassmann::HermitianProjector::new(ComplexMatrix::from_real_diag(&[0.0, 1.0])).unwrap();
        let r = build_rkhs(&k, vec![BasePoint::Grass(e1), BasePoint::Grass(e2)], 0.0).unwrap();
        let f = r.embed(&r.points()[1], &[c64(1.0, 0.0)]).unwrap();
        let p = r.project_fiber(&r.points()[0], &f).unwrap();
        assert!(p.coefficients().iter().all(|z| z.norm() < 1e-15));
        assert!(r.universality_residual().unwrap() < 1e-12);
    }

    #[test]
    fn foreign_elements_are_rejected() {
        let k = bergman_disk(2.0).unwrap();
        let a = build_rkhs(&k, grid(), 0.0).unwrap();
        let b = build_rkhs(&k, grid(), 0.0).unwrap();
        let f = a.zero();
        let g = b.zero();
        assert!(a.inner(&f, &g).is_err());
        assert!(f.add(&g).is_err());
    }
}
