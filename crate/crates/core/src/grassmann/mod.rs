//! Finite Grassmannians as manifolds of orthogonal projectors: the universal
//! kernel, the block-diagonal conditional expectation and the connections it
//! induces on tautological and homogeneous bundles.

mod projector;

use rand::Rng;

pub use projector::HermitianProjector;

use crate::connections::{covariant_derivative_direct, Section};
use crate::error::{Error, Result};
use crate::kernels::{BasePoint, Domain, Kernel, TangentVector};
use crate::numerics::{directional_derivative, inner, vec_distance, vec_norm, ComplexMatrix, C64, DEFAULT_STEP};
use crate::random::{random_anti_hermitian, random_unitary_with};

/// Tolerance for membership tests (`X ∈ m`, commuting with `p`, ...).
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Tolerance for `F(S) ∈ S` on probe points.
pub const FIBER_TOL: f64 = 1e-8;

/// `E_p(X) = pXp + (1 − p)X(1 − p)`.
pub fn conditional_expectation(p: &HermitianProjector, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.shape() != p.matrix().shape() {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, projector is {}x{}",
            x.shape(),
            p.dim(),
            p.dim()
        )));
    }
    let q = p.complement();
    let pm = p.matrix();
    Ok(&(&(pm * x) * pm) + &(&(&q * x) * &q))
}

/// `X − E_p(X)`, the off-diagonal part of `X` relative to `p`.
pub fn off_diagonal_part(p: &HermitianProjector, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(x - &conditional_expectation(p, x)?)
}

/// The reductive structure of `U(n)` relative to the stabilizer of `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductiveStructure {
    p: HermitianProjector,
}

impl ReductiveStructure {
    pub fn new(p: HermitianProjector) -> Self {
        Self { p }
    }

    pub fn projector(&self) -> &HermitianProjector {
        &self.p
    }

    pub fn expectation(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        conditional_expectation(&self.p, x)
    }

    /// `‖E(E(X)) − E(X)‖`.
    pub fn idempotence_residual(&self, x: &ComplexMatrix) -> Result<f64> {
        let e = self.expectation(x)?;
        Ok((&self.expectation(&e)? - &e).norm())
    }

    /// `‖gp − pg‖`.
    pub fn commutation_residual(&self, g: &ComplexMatrix) -> Result<f64> {
        let pm = self.p.matrix();
        Ok(g.try_mul(pm)?.try_sub(&pm.try_mul(g)?)?.norm())
    }

    /// `max ‖E(gXg⁻¹) − gE(X)g⁻¹‖` over the given subgroup elements and operators.
    pub fn reductive_axioms_residual(&self, gs: &[ComplexMatrix], xs: &[ComplexMatrix]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, g) in gs.iter().enumerate() {
            let unitarity = g.unitarity_residual();
            let comm = self.commutation_residual(g)?;
            if unitarity >= MEMBERSHIP_TOL || comm >= MEMBERSHIP_TOL {
                return Err(Error::Precondition(format!(
                    "element {i} is not a unitary commuting with p (unitarity {unitarity:e}, commutator {comm:e})"
                )));
            }
            let gi = g.adjoint();
            for x in xs {
                let lhs = self.expectation(&(&(g * x) * &gi))?;
                let rhs = &(g * &self.expectation(x)?) * &gi;
                worst = worst.max((&lhs - &rhs).norm());
            }
        }
        Ok(worst)
    }

    /// `‖E(X)‖`, zero exactly when `X ∈ m`.
    pub fn complement_residual(&self, x: &ComplexMatrix) -> Result<f64> {
        Ok(self.expectation(x)?.norm())
    }

    fn require_in_m(&self, x: &ComplexMatrix) -> Result<()> {
        let res = self.complement_residual(x)?;
        if res >= MEMBERSHIP_TOL * x.norm().max(1.0) {
            return Err(Error::Precondition(format!(
                "operator is not in the complement m (E(X) has norm {res:e})"
            )));
        }
        Ok(())
    }

    /// Maurer-Cartan form `β(g, X) = gXg⁻¹` for `X ∈ m`.
    pub fn maurer_cartan(&self, g: &ComplexMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.require_in_m(x)?;
        g.try_mul(x)?.try_mul(&g.adjoint())
    }

    /// Vertical normal form of the connection map: `(f, h) ↦ (f, E(X)f + h)`
    /// for `f, h ∈ Ran p`.
    pub fn phi_e_vertical(
        &self,
        g: &ComplexMatrix,
        x: &ComplexMatrix,
        f: &[C64],
        h: &[C64],
    ) -> Result<(Vec<C64>, Vec<C64>)> {
        if g.shape() != self.p.matrix().shape() || g.unitarity_residual() >= MEMBERSHIP_TOL {
            return Err(Error::Precondition(
                "group element must be unitary of the ambient size".into(),
            ));
        }
        for (name, v) in [("f", f), ("h", h)] {
            let res = self.p.range_residual(v)?;
            if res >= MEMBERSHIP_TOL * vec_norm(v).max(1.0) {
                return Err(Error::Precondition(format!(
                    "{name} is not in the range of p (residual {res:e})"
                )));
            }
        }
        let ef = self.expectation(x)?.mat_vec(f)?;
        Ok((f.to_vec(), ef.iter().zip(h).map(|(a, b)| a + b).collect()))
    }
}

/// A tangent vector to the Grassmannian at `p`: an anti-Hermitian generator
/// `A ∈ m` moving `p` along `e^{tA} p e^{−tA}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassTangent {
    base: HermitianProjector,
    generator: ComplexMatrix,
}

impl GrassTangent {
    pub fn new(base: HermitianProjector, generator: ComplexMatrix) -> Result<Self> {
        let skew = generator.anti_hermitian_residual();
        if skew >= MEMBERSHIP_TOL {
            return Err(Error::Precondition(format!(
                "generator is not anti-Hermitian (residual {skew:e})"
            )));
        }
        ReductiveStructure::new(base.clone()).require_in_m(&generator)?;
        Ok(Self { base, generator })
    }

    pub fn base(&self) -> &HermitianProjector {
        &self.base
    }

    pub fn generator(&self) -> &ComplexMatrix {
        &self.generator
    }

    pub fn point(&self) -> BasePoint {
        BasePoint::Grass(self.base.clone())
    }

    pub fn tangent(&self) -> TangentVector {
        TangentVector::Grass(self.generator.clone())
    }
}

/// `Q(S₁, S₂) = B₁* B₂`, the compression `p_{S₁}|_{S₂}` in fiber coordinates.
pub fn universal_kernel(n: usize, k: usize) -> Result<Kernel> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::Precondition(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    Ok(Kernel::new(
        format!("universal:n={n},k={k}"),
        k,
        Domain::Grassmann { n, rank: k },
        |s, t| {
            let (s, t) = (grass(s)?, grass(t)?);
            s.basis().adjoint().try_mul(t.basis())
        },
    ))
}

fn grass(p: &BasePoint) -> Result<&HermitianProjector> {
    p.as_grass()
        .ok_or_else(|| Error::Precondition("expected a Grassmannian base point".into()))
}

fn require_fiber_valued(f: &Section, p: &BasePoint) -> Result<Vec<C64>> {
    let v = f.value(p)?;
    let res = grass(p)?.range_residual(&v)?;
    if res >= FIBER_TOL * vec_norm(&v).max(1.0) {
        return Err(Error::Precondition(format!(
            "section value is not in its fiber (residual {res:e})"
        )));
    }
    Ok(v)
}

fn grass_step(a: &ComplexMatrix) -> f64 {
    DEFAULT_STEP / a.norm().max(1.0)
}

/// `p · d/dτ F(e^{τA} p e^{−τA})` at `τ = 0`.
pub fn universal_covariant_derivative(f: &Section, t: &GrassTangent) -> Result<Vec<C64>> {
    let (p, x) = (t.point(), t.tangent());
    let h = grass_step(t.generator());
    require_fiber_valued(f, &p)?;
    for offset in [-2.0, 2.0] {
        require_fiber_valued(f, &p.along(&x, offset * h)?)?;
    }
    let d = directional_derivative(|eps| f.value(&p.along(&x, eps)?), h)?;
    t.base().project(&d)
}

/// `dF − gXg⁻¹ F(q)` along `τ ↦ g e^{τX} p₀ e^{−τX} g⁻¹`, with `q = g p₀ g⁻¹`.
pub fn reductive_covariant_derivative(
    f: &Section,
    rs: &ReductiveStructure,
    g: &ComplexMatrix,
    x: &ComplexMatrix,
) -> Result<Vec<C64>> {
    let beta = rs.maurer_cartan(g, x)?;
    let p0 = rs.projector();
    let point = |tau: f64| -> Result<BasePoint> {
        let e = crate::numerics::expm_anti_hermitian(&x.scale_real(tau))?;
        let ge = g.try_mul(&e)?;
        Ok(BasePoint::Grass(HermitianProjector::new(
            ge.try_mul(p0.matrix())?.try_mul(&ge.adjoint())?,
        )?))
    };
    let q = BasePoint::Grass(p0.conjugated(g)?);
    let fq = require_fiber_valued(f, &q)?;
    let h = grass_step(x);
    let d = directional_derivative(|tau| f.value(&point(tau)?), h)?;
    let correction = beta.mat_vec(&fq)?;
    Ok(d.iter().zip(&correction).map(|(a, b)| a - b).collect())
}

/// The generic kernel pipeline on `Q`: the section in fiber coordinates
/// `S ↦ B_S* F(S)`, its direct covariant derivative, mapped back by `B_p`.
pub fn generic_universal_covariant_derivative(f: &Section, t: &GrassTangent) -> Result<Vec<C64>> {
    let q = universal_kernel(t.base().dim(), t.base().rank())?;
    let f = f.clone();
    let coords = Section::new(move |s| {
        let v = require_fiber_valued(&f, s)?;
        grass(s)?.coordinates(&v)
    });
    let c = covariant_derivative_direct(&q, &coords, &t.point(), &t.tangent())?;
    t.base().ambient(&c)
}

/// `|d(F|G)(X) − (∇F(X)|G) − (F|∇G(X))|` for the universal connection.
pub fn metric_compatibility_residual(f: &Section, g: &Section, t: &GrassTangent) -> Result<f64> {
    let (p, x) = (t.point(), t.tangent());
    let h = grass_step(t.generator());
    let d = directional_derivative(
        |eps| {
            let s = p.along(&x, eps)?;
            Ok(vec![inner(&f.value(&s)?, &g.value(&s)?)])
        },
        h,
    )?[0];
    let nf = universal_covariant_derivative(f, t)?;
    let ng = universal_covariant_derivative(g, t)?;
    let rhs = inner(&nf, &g.value(&p)?) + inner(&f.value(&p)?, &ng);
    Ok((d - rhs).norm())
}

/// `‖∇F'(αpα⁻¹, αAα⁻¹) − α∇F(p, A)‖` with `F'(q) = αF(α⁻¹qα)`.
pub fn universal_equivariance_residual(f: &Section, t: &GrassTangent, alpha: &ComplexMatrix) -> Result<f64> {
    let moved = {
        let (f, alpha) = (f.clone(), alpha.clone());
        Section::new(move |s| {
            let back = grass(s)?.conjugated(&alpha.adjoint())?;
            alpha.mat_vec(&f.value(&BasePoint::Grass(back))?)
        })
    };
    let t_moved = GrassTangent::new(
        t.base().conjugated(alpha)?,
        alpha.try_mul(t.generator())?.try_mul(&alpha.adjoint())?,
    )?;
    let lhs = universal_covariant_derivative(&moved, &t_moved)?;
    let rhs = alpha.mat_vec(&universal_covariant_derivative(f, t)?)?;
    Ok(vec_distance(&lhs, &rhs))
}

/// `F(S) = p_S v₀`, a fiber-valued section of the tautological bundle.
pub fn projected_section(v0: Vec<C64>) -> Section {
    Section::new(move |s| grass(s)?.project(&v0))
}

/// `F(S) = p_S M p_S v₀`, a less trivial fiber-valued section.
pub fn compressed_section(m: ComplexMatrix, v0: Vec<C64>) -> Section {
    Section::new(move |s| {
        let p = grass(s)?;
        p.project(&m.mat_vec(&p.project(&v0)?)?)
    })
}

/// Kernel `K(u, v) = B* u⁻¹ v B` on `U(n)`, `B` an orthonormal basis of `Ran P`.
pub fn homogeneous_kernel(p: &HermitianProjector) -> Result<Kernel> {
    let n = p.dim();
    let b = p.basis().clone();
    if b.cols() == 0 {
        return Err(Error::Precondition("projector has rank zero".into()));
    }
    let b2 = b.clone();
    Ok(Kernel::new(
        format!("homogeneous:n={n},k={}", p.rank()),
        p.rank(),
        Domain::Unitary { n },
        move |u, v| {
            let (u, v) = (unitary(u)?, unitary(v)?);
            b.adjoint().try_mul(&u.adjoint())?.try_mul(v)?.try_mul(&b)
        },
    )
    .with_partial_second(move |u, v, a| {
        let (u, v) = (unitary(u)?, unitary(v)?);
        let TangentVector::AntiHermitian(a) = a else {
            return Err(Error::Precondition("direction must be anti-Hermitian".into()));
        };
        b2.adjoint().try_mul(&u.adjoint())?.try_mul(v)?.try_mul(a)?.try_mul(&b2)
    }))
}

fn unitary(p: &BasePoint) -> Result<&ComplexMatrix> {
    p.as_unitary()
        .ok_or_else(|| Error::Precondition("expected a unitary base point".into()))
}

/// `φ(u) = u⁻¹ F(uPu⁻¹)`, the equivariant function of a tautological section.
pub fn equivariant_section(f: &Section, p: &HermitianProjector) -> Section {
    let (f, p) = (f.clone(), p.clone());
    Section::new(move |u| {
        let u = unitary(u)?;
        let v = f.value(&BasePoint::Grass(p.conjugated(u)?))?;
        u.adjoint().mat_vec(&v)
    })
}

/// `‖φ(uw) − w⁻¹φ(u)‖` maximized over the given stabilizer elements `w`.
pub fn equivariance_residual(phi: &Section, u: &ComplexMatrix, ws: &[ComplexMatrix]) -> Result<f64> {
    let base = phi.value(&BasePoint::Unitary(u.clone()))?;
    let mut worst = 0.0f64;
    for w in ws {
        let lhs = phi.value(&BasePoint::Unitary(u.try_mul(w)?))?;
        let rhs = w.adjoint().mat_vec(&base)?;
        worst = worst.max(vec_distance(&lhs, &rhs));
    }
    Ok(worst)
}

/// Equivariance tolerance for homogeneous sections.
pub const EQUIVARIANCE_TOL: f64 = 1e-8;

/// `dφ(u, a) + P a φ(u)` along `u e^{ta}`, after spot-checking
/// equivariance on the supplied stabilizer elements.
pub fn homogeneous_covariant_derivative(
    phi: &Section,
    p: &HermitianProjector,
    u: &ComplexMatrix,
    a: &ComplexMatrix,
    checks: &[ComplexMatrix],
) -> Result<Vec<C64>> {
    if a.anti_hermitian_residual() >= MEMBERSHIP_TOL {
        return Err(Error::Precondition("direction must be anti-Hermitian".into()));
    }
    let rs = ReductiveStructure::new(p.clone());
    for w in checks {
        if rs.commutation_residual(w)? >= MEMBERSHIP_TOL {
            return Err(Error::Precondition(
                "equivariance checks need elements commuting with P".into(),
            ));
        }
    }
    let res = equivariance_residual(phi, u, checks)?;
    if res > EQUIVARIANCE_TOL {
        return Err(Error::Precondition(format!(
            "section is not equivariant (residual {res:e})"
        )));
    }
    let s = BasePoint::Unitary(u.clone());
    let x = TangentVector::AntiHermitian(a.clone());
    let value = phi.value(&s)?;
    let d = phi.differential(&s, &x, DEFAULT_STEP / a.norm().max(1.0))?;
    let correction = p.project(&a.mat_vec(&value)?)?;
    Ok(d.iter().zip(&correction).map(|(x, y)| x + y).collect())
}

/// The generic pipeline on [`homogeneous_kernel`], returned in ambient coordinates.
pub fn generic_homogeneous_covariant_derivative(
    phi: &Section,
    p: &HermitianProjector,
    u: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Result<Vec<C64>> {
    let k = homogeneous_kernel(p)?;
    let (phi, pp) = (phi.clone(), p.clone());
    let coords = Section::new(move |s| pp.coordinates(&phi.value(s)?));
    let c = covariant_derivative_direct(
        &k,
        &coords,
        &BasePoint::Unitary(u.clone()),
        &TangentVector::AntiHermitian(a.clone()),
    )?;
    p.ambient(&c)
}

/// `g = B U₁ B* + C U₂ C*` with Haar-ish `U₁, U₂` on `Ran p` and its complement.
pub fn random_block_unitary<R: Rng + ?Sized>(rng: &mut R, p: &HermitianProjector) -> Result<ComplexMatrix> {
    let n = p.dim();
    let k = p.rank();
    let mut g = ComplexMatrix::zeros(n, n);
    if k > 0 {
        let b = p.basis();
        g = g.try_add(&b.try_mul(&random_unitary_with(rng, k))?.try_mul(&b.adjoint())?)?;
    }
    if k < n {
        let c = HermitianProjector::new(p.complement())?;
        let cb = c.basis();
        g = g.try_add(&cb.try_mul(&random_unitary_with(rng, n - k))?.try_mul(&cb.adjoint())?)?;
    }
    Ok(g)
}

/// Random anti-Hermitian element of `m` at `p`.
pub fn random_complement_element<R: Rng + ?Sized>(rng: &mut R, p: &HermitianProjector) -> Result<ComplexMatrix> {
    off_diagonal_part(p, &random_anti_hermitian(rng, p.dim()))
}

/// Random tangent at `p`.
pub fn random_grass_tangent<R: Rng + ?Sized>(rng: &mut R, p: &HermitianProjector) -> Result<GrassTangent> {
    GrassTangent::new(p.clone(), random_complement_element(rng, p)?)
}
