//! Completely positive maps `Ψ: M_n → M_m`: Choi and Kraus forms, minimal
//! Stinespring dilations, and the kernel `K^Ψ(s, t) = Ψ(s⁻¹t)` on `U(n)`.
//!
//! The Choi matrix is indexed by `(j, α) ↦ j·m + α` with the input factor
//! first: `C[(j,α),(k,β)] = Ψ(E_jk)[α,β]`. Dilation spaces `ℂ^n ⊗ ℂ^r` use
//! `(j, i) ↦ j·r + i`, dilation index second.

use rand::Rng;
use serde::Serialize;

use crate::connections::{covariant_derivative_direct, BundleMorphism, Section};
use crate::error::{Error, Result};
use crate::grassmann::HermitianProjector;
use crate::kernels::{BasePoint, Domain, Kernel, TangentVector};
use crate::numerics::{hermitian_eigh, inverse_sqrt_psd, ComplexMatrix, C64, DEFAULT_STEP};
use crate::random::gaussian_matrix;

/// Relative eigenvalue threshold defining the Choi rank.
pub const CHOI_RANK_THRESHOLD: f64 = 1e-10;
/// Unitality tolerance `‖Σ K_i K_i* − I‖`.
pub const UNITAL_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    n_in: usize,
    n_out: usize,
    choi: ComplexMatrix,
    kraus: Vec<ComplexMatrix>,
}

/// `C = Σ_i vec(K_i) vec(K_i)*` with `vec(K)[j·m + α] = K[α, j]`.
pub fn choi_from_kraus(kraus: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let first = kraus
        .first()
        .ok_or_else(|| Error::Precondition("need at least one Kraus operator".into()))?;
    let (m, n) = first.shape();
    let mut c = ComplexMatrix::zeros(n * m, n * m);
    for k in kraus {
        if k.shape() != (m, n) {
            return Err(Error::DimensionMismatch("Kraus operators of different shapes".into()));
        }
        let v = ComplexMatrix::from_fn(n * m, 1, |idx, _| k[(idx % m, idx / m)]);
        c = c.try_add(&v.try_mul(&v.adjoint())?)?;
    }
    Ok(c)
}

/// Kraus operators `√λ_i · unvec(v_i)` for the Choi eigenpairs above
/// `τ · λ_max`, in descending eigenvalue order.
pub fn kraus_from_choi(choi: &ComplexMatrix, n_in: usize, n_out: usize, tau: f64) -> Result<Vec<ComplexMatrix>> {
    let size = choi.require_square()?;
    if size != n_in * n_out {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix is {size}x{size}, expected {0}x{0}",
            n_in * n_out
        )));
    }
    let herm = choi.hermitian_residual();
    if herm > HERMITIAN_TOL * choi.norm().max(1.0) {
        return Err(Error::NotHermitian { residual: herm });
    }
    let eig = hermitian_eigh(choi)?;
    let lmax = eig.max_value().max(0.0);
    let cutoff = tau * lmax;
    if eig.min_value() < -cutoff.max(HERMITIAN_TOL) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    let mut kraus = Vec::new();
    for idx in (0..size).rev() {
        let l = eig.values[idx];
        if l <= cutoff || l <= 0.0 {
            continue;
        }
        let scale = l.sqrt();
        kraus.push(ComplexMatrix::from_fn(n_out, n_in, |alpha, j| {
            eig.vectors[(j * n_out + alpha, idx)] * scale
        }));
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(n_out, n_in));
    }
    Ok(kraus)
}

impl CpMap {
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let choi = choi_from_kraus(&kraus)?;
        let (n_out, n_in) = kraus[0].shape();
        Ok(Self {
            n_in,
            n_out,
            choi,
            kraus,
        })
    }

    pub fn from_choi(choi: ComplexMatrix, n_in: usize, n_out: usize) -> Result<Self> {
        let kraus = kraus_from_choi(&choi, n_in, n_out, CHOI_RANK_THRESHOLD)?;
        Ok(Self {
            n_in,
            n_out,
            choi,
            kraus,
        })
    }

    /// Reads the dimensions off the Choi matrix: with `input_dim` given the
    /// output dimension follows; otherwise the unique factorization
    /// `nm = size` whose partial trace over the input is `I_m` is used.
    pub fn from_choi_inferred(choi: ComplexMatrix, input_dim: Option<usize>) -> Result<Self> {
        let size = choi.require_square()?;
        if let Some(n) = input_dim {
            if n == 0 || size % n != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "input dimension {n} does not divide the Choi size {size}"
                )));
            }
            return Self::from_choi(choi, n, size / n);
        }
        let candidates: Vec<usize> = (1..=size)
            .filter(|n| size % n == 0)
            .filter(|&n| partial_trace_input(&choi, n, size / n).is_some_and(|r| r < UNITAL_TOL))
            .collect();
        match candidates.as_slice() {
            [n] => Self::from_choi(choi, *n, size / n),
            [] => Err(Error::Precondition(format!(
                "no factorization of the {size}x{size} Choi matrix describes a unital map; pass the input dimension"
            ))),
            many => Err(Error::Precondition(format!(
                "Choi matrix is unital for several input dimensions {many:?}; pass the input dimension"
            ))),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.n_in
    }

    pub fn output_dim(&self) -> usize {
        self.n_out
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Numerical rank of the Choi matrix.
    pub fn choi_rank(&self) -> Result<usize> {
        let eig = hermitian_eigh(&self.choi)?;
        let cutoff = CHOI_RANK_THRESHOLD * eig.max_value().max(0.0);
        Ok(eig.values.iter().filter(|&&l| l > cutoff && l > 0.0).count())
    }

    /// `Ψ(a) = Σ_i K_i a K_i*`.
    pub fn apply(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.shape() != (self.n_in, self.n_in) {
            return Err(Error::DimensionMismatch(format!(
                "argument is {:?}, map acts on {}x{}",
                a.shape(),
                self.n_in,
                self.n_in
            )));
        }
        let mut out = ComplexMatrix::zeros(self.n_out, self.n_out);
        for k in &self.kraus {
            out = out.try_add(&k.try_mul(a)?.try_mul(&k.adjoint())?)?;
        }
        Ok(out)
    }

    /// `‖Ψ(I) − I‖`.
    pub fn unital_residual(&self) -> f64 {
        let mut s = ComplexMatrix::zeros(self.n_out, self.n_out);
        for k in &self.kraus {
            s = &s + &(k * &k.adjoint());
        }
        (&s - &ComplexMatrix::identity(self.n_out)).norm()
    }

    pub fn is_unital(&self) -> bool {
        self.unital_residual() < UNITAL_TOL
    }

    fn require_unital(&self) -> Result<()> {
        let residual = self.unital_residual();
        if residual < UNITAL_TOL {
            Ok(())
        } else {
            Err(Error::NonUnital { residual })
        }
    }
}

/// `‖Σ_j C[(j,·),(j,·)] − I_m‖`, or `None` when the sizes do not fit.
fn partial_trace_input(choi: &ComplexMatrix, n: usize, m: usize) -> Option<f64> {
    if choi.rows() != n * m {
        return None;
    }
    let mut acc = ComplexMatrix::zeros(m, m);
    for j in 0..n {
        acc = &acc + &choi.block(j * m, j * m, m, m);
    }
    Some((&acc - &ComplexMatrix::identity(m)).norm())
}

/// `Ψ(a) = V*(a ⊗ I_r)V` with `V: ℂ^m → ℂ^n ⊗ ℂ^r` an isometry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StinespringTriple {
    #[serde(skip)]
    v: ComplexMatrix,
    n_in: usize,
    rank: usize,
}

impl StinespringTriple {
    pub fn new(v: ComplexMatrix, n_in: usize, rank: usize) -> Result<Self> {
        if v.rows() != n_in * rank {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {}",
                v.rows(),
                n_in * rank
            )));
        }
        Ok(Self { v, n_in, rank })
    }

    pub fn isometry(&self) -> &ComplexMatrix {
        &self.v
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn input_dim(&self) -> usize {
        self.n_in
    }

    pub fn output_dim(&self) -> usize {
        self.v.cols()
    }

    /// `λ(a) = a ⊗ I_r`.
    pub fn lambda(&self, a: &ComplexMatrix) -> ComplexMatrix {
        a.kron(&ComplexMatrix::identity(self.rank))
    }

    /// `‖V*V − I‖`.
    pub fn isometry_residual(&self) -> f64 {
        self.v.unitarity_residual()
    }
}

/// Minimal dilation `V h = Σ_i (K_i* h) ⊗ e_i`, with `r` the Choi rank.
pub fn stinespring_dilate(psi: &CpMap) -> Result<StinespringTriple> {
    psi.require_unital()?;
    let (n, m) = (psi.n_in, psi.n_out);
    let r = psi.kraus.len();
    let v = ComplexMatrix::from_fn(n * r, m, |row, beta| {
        let (j, i) = (row / r, row % r);
        psi.kraus[i][(beta, j)].conj()
    });
    StinespringTriple::new(v, n, r)
}

/// `max_{j,k} ‖Ψ(E_jk) − V*λ(E_jk)V‖`.
pub fn verify_dilation(psi: &CpMap, s: &StinespringTriple) -> Result<f64> {
    if s.input_dim() != psi.n_in || s.output_dim() != psi.n_out {
        return Err(Error::DimensionMismatch("dilation does not match the map".into()));
    }
    let (n, m) = (psi.n_in, psi.n_out);
    let mut worst = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let mut e = ComplexMatrix::zeros(n, n);
            e.set_block(j, k, &ComplexMatrix::identity(1));
            // Block (j, k) of the Choi matrix is Ψ(E_jk).
            let lhs = psi.choi.block(j * m, k * m, m, m);
            let rhs = s.v.adjoint().try_mul(&s.lambda(&e))?.try_mul(&s.v)?;
            worst = worst.max((&lhs - &rhs).norm());
        }
    }
    Ok(worst)
}

fn unitary(p: &BasePoint) -> Result<&ComplexMatrix> {
    p.as_unitary()
        .ok_or_else(|| Error::Precondition("expected a unitary base point".into()))
}

fn anti_hermitian(x: &TangentVector) -> Result<&ComplexMatrix> {
    match x {
        TangentVector::AntiHermitian(a) => Ok(a),
        _ => Err(Error::Precondition("direction must be anti-Hermitian".into())),
    }
}

/// `K^Ψ(s, t) = Ψ(s⁻¹t)` on `U(n)` with `∂₂K^Ψ(s, t)(a) = Ψ(s⁻¹ t a)`.
pub fn cp_kernel(psi: &CpMap) -> Result<Kernel> {
    psi.require_unital()?;
    let (p1, p2) = (psi.clone(), psi.clone());
    Ok(Kernel::new(
        format!("cp:n={},m={}", psi.n_in, psi.n_out),
        psi.n_out,
        Domain::Unitary { n: psi.n_in },
        move |s, t| p1.apply(&unitary(s)?.adjoint().try_mul(unitary(t)?)?),
    )
    .with_partial_second(move |s, t, x| {
        let a = anti_hermitian(x)?;
        p2.apply(&unitary(s)?.adjoint().try_mul(unitary(t)?)?.try_mul(a)?)
    }))
}

/// `K^λ(s, t) = λ(s⁻¹t)` on the dilation space.
pub fn lambda_kernel(s: &StinespringTriple) -> Kernel {
    let (n, r) = (s.n_in, s.rank);
    Kernel::new(
        format!("lambda:n={n},r={r}"),
        n * r,
        Domain::Unitary { n },
        move |u, v| {
            Ok(unitary(u)?
                .adjoint()
                .try_mul(unitary(v)?)?
                .kron(&ComplexMatrix::identity(r)))
        },
    )
}

/// The subspace `S₀ = V(ℂ^m)` with its deterministic orthonormal basis.
pub fn dilation_fiber(s: &StinespringTriple) -> Result<HermitianProjector> {
    HermitianProjector::new(s.v.try_mul(&s.v.adjoint())?)
}

/// `K₀^λ(s, t) = P_{S₀} λ(s⁻¹t) ι_{S₀}` in the coordinates of the basis `B` of `S₀`.
pub fn compressed_lambda_kernel(s: &StinespringTriple) -> Result<Kernel> {
    let fiber = dilation_fiber(s)?;
    let (n, r) = (s.n_in, s.rank);
    let b = fiber.basis().clone();
    let b2 = b.clone();
    Ok(Kernel::new(
        format!("lambda0:n={n},r={r}"),
        b.cols(),
        Domain::Unitary { n },
        move |u, v| {
            let l = unitary(u)?
                .adjoint()
                .try_mul(unitary(v)?)?
                .kron(&ComplexMatrix::identity(r));
            b.adjoint().try_mul(&l)?.try_mul(&b)
        },
    )
    .with_partial_second(move |u, v, x| {
        let a = anti_hermitian(x)?;
        let l = unitary(u)?
            .adjoint()
            .try_mul(unitary(v)?)?
            .try_mul(a)?
            .kron(&ComplexMatrix::identity(r));
        b2.adjoint().try_mul(&l)?.try_mul(&b2)
    }))
}

/// `Θ_V = (id × V, id)` into the full dilation bundle.
pub fn theta_v(s: &StinespringTriple) -> BundleMorphism {
    BundleMorphism::constant_fiber(s.v.clone())
}

/// `Θ_V` into `U(n) × S₀`, with `δ = B*V` in the basis of `S₀`.
pub fn theta_v_compressed(s: &StinespringTriple) -> Result<BundleMorphism> {
    let fiber = dilation_fiber(s)?;
    Ok(BundleMorphism::constant_fiber(fiber.basis().adjoint().try_mul(&s.v)?))
}

/// `dσ(u, a) + Ψ(a)σ(u)` along `u e^{ta}`.
pub fn cp_covariant_derivative(psi: &CpMap, sigma: &Section, u: &ComplexMatrix, a: &ComplexMatrix) -> Result<Vec<C64>> {
    let skew = a.anti_hermitian_residual();
    if skew >= 1e-10 {
        return Err(Error::Precondition(format!(
            "direction is not anti-Hermitian (residual {skew:e})"
        )));
    }
    let s = BasePoint::Unitary(u.clone());
    let x = TangentVector::AntiHermitian(a.clone());
    let mut out = sigma.differential(&s, &x, DEFAULT_STEP / a.norm().max(1.0))?;
    let correction = psi.apply(a)?.mat_vec(&sigma.value(&s)?)?;
    for (o, c) in out.iter_mut().zip(correction) {
        *o += c;
    }
    Ok(out)
}

/// The generic direct pipeline on [`cp_kernel`].
pub fn generic_cp_covariant_derivative(
    psi: &CpMap,
    sigma: &Section,
    u: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Result<Vec<C64>> {
    covariant_derivative_direct(
        &cp_kernel(psi)?,
        sigma,
        &BasePoint::Unitary(u.clone()),
        &TangentVector::AntiHermitian(a.clone()),
    )
}

/// Random unital CP map with `r` Kraus operators: Gaussian `G_i`
/// normalized as `K_i = S^{-1/2} G_i` with `S = Σ G_i G_i*`.
pub fn random_unital_cp_map<R: Rng + ?Sized>(rng: &mut R, n_in: usize, n_out: usize, r: usize) -> Result<CpMap> {
    if r == 0 {
        return Err(Error::Precondition("need at least one Kraus operator".into()));
    }
    let gs: Vec<ComplexMatrix> = (0..r).map(|_| gaussian_matrix(rng, n_out, n_in)).collect();
    let mut s = ComplexMatrix::zeros(n_out, n_out);
    for g in &gs {
        s = &s + &(g * &g.adjoint());
    }
    let t = inverse_sqrt_psd(&s.hermitian_part())?;
    CpMap::from_kraus(gs.iter().map(|g| &t * g).collect())
}

/// `Ψ(a) = tr(a)/n · I_n`.
pub fn depolarizing(n: usize) -> Result<CpMap> {
    let scale = (n as f64).sqrt().recip();
    let mut kraus = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut e = ComplexMatrix::zeros(n, n);
            e.set_block(j, k, &ComplexMatrix::from_real_diag(&[scale]));
            kraus.push(e);
        }
    }
    CpMap::from_kraus(kraus)
}

/// `Ψ_{S₀}(X) = B* X B`, compression to the range of `p`.
pub fn compression_map(p: &HermitianProjector) -> Result<CpMap> {
    CpMap::from_kraus(vec![p.basis().adjoint()])
}

/// `max ‖Ψ_{S₀}(E_p(X)) − Ψ_{S₀}(X)‖` over the operators.
pub fn compression_expectation_residual(p: &HermitianProjector, xs: &[ComplexMatrix]) -> Result<f64> {
    let psi = compression_map(p)?;
    let mut worst = 0.0f64;
    for x in xs {
        let lhs = psi.apply(&crate::grassmann::conditional_expectation(p, x)?)?;
        worst = worst.max((&lhs - &psi.apply(x)?).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
