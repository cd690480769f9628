//! Classical scalar kernels: Bergman/Hardy on the disk and half-plane, Fock.

use super::{BasePoint, Domain, Kernel, TangentVector};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eigh, inner, ComplexMatrix, C64};

/// Disk points with `|s|` at or beyond this radius are rejected.
pub const DISK_HARD_LIMIT: f64 = 1.0 - 1e-6;

fn scalar(z: C64) -> ComplexMatrix {
    ComplexMatrix::from_vec(1, 1, vec![z]).expect("1x1")
}

/// `z^{-nu}` on the principal branch; exact integer powers when `nu` is integral.
fn neg_power(z: C64, nu: f64) -> C64 {
    if nu.fract() == 0.0 && nu.abs() < i32::MAX as f64 {
        z.powi(-(nu as i32))
    } else {
        z.powf(-nu)
    }
}

fn direction(x: &TangentVector) -> Result<C64> {
    match x {
        TangentVector::Vector(v) if v.len() == 1 => Ok(v[0]),
        _ => Err(Error::Precondition("expected a scalar direction".into())),
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu >= 1.0 {
        Ok(())
    } else {
        Err(Error::Precondition(format!("weight nu must be >= 1, got {nu}")))
    }
}

/// `K(s, t) = (1 − t̄ s)^{−ν}` on the unit disk; `ν = 1` is the Hardy kernel.
pub fn bergman_disk(nu: f64) -> Result<Kernel> {
    check_nu(nu)?;
    let k = Kernel::new(format!("bergman-disk:nu={nu}"), 1, Domain::Disk, move |s, t| {
        let (s, t) = (s.scalar_value()?, t.scalar_value()?);
        Ok(scalar(neg_power(C64::new(1.0, 0.0) - t.conj() * s, nu)))
    })
    .with_partial_second(move |s, t, x| {
        let (s, t, w) = (s.scalar_value()?, t.scalar_value()?, direction(x)?);
        // d/dε (1 − conj(t + εw) s)^{−ν} = ν s w̄ (1 − t̄ s)^{−ν−1}
        Ok(scalar(
            nu * s * w.conj() * neg_power(C64::new(1.0, 0.0) - t.conj() * s, nu + 1.0),
        ))
    });
    Ok(k)
}

/// `K(z, w) = ¼ (2i)^ν / (z − w̄)^ν` on the upper half-plane.
pub fn bergman_halfplane(nu: f64) -> Result<Kernel> {
    check_nu(nu)?;
    let two_i = C64::new(0.0, 2.0);
    let k = Kernel::new(
        format!("bergman-halfplane:nu={nu}"),
        1,
        Domain::HalfPlane,
        move |z, w| {
            let (z, w) = (z.scalar_value()?, w.scalar_value()?);
            // ((z − w̄)/2i) has positive real part, so the principal branch is continuous.
            Ok(scalar(0.25 * neg_power((z - w.conj()) / two_i, nu)))
        },
    )
    .with_partial_second(move |z, w, x| {
        let (z, w, l) = (z.scalar_value()?, w.scalar_value()?, direction(x)?);
        let u = (z - w.conj()) / two_i;
        Ok(scalar(0.25 * nu * l.conj() / two_i * neg_power(u, nu + 1.0)))
    });
    Ok(k)
}

/// `K(z, w) = exp(β(z, w))` with `β(z, w) = w* B z` for a Hermitian PSD `B`.
pub fn fock(beta: ComplexMatrix) -> Result<Kernel> {
    let dim = beta.require_square()?;
    let herm = beta.hermitian_residual();
    if herm > 1e-12 * beta.norm().max(1.0) {
        return Err(Error::NotHermitian { residual: herm });
    }
    let eig = hermitian_eigh(&beta)?;
    if eig.min_value() < -1e-12 * eig.max_value().max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    let form = move |z: &[C64], w: &[C64]| -> Result<C64> { Ok(inner(&beta.mat_vec(z)?, w)) };
    let form2 = form.clone();
    let k = Kernel::new(format!("fock:dim={dim}"), 1, Domain::Complex { dim }, move |z, w| {
        let (z, w) = (vector(z)?, vector(w)?);
        Ok(scalar(form(z, w)?.exp()))
    })
    .with_partial_second(move |z, w, x| {
        let (z, w) = (vector(z)?, vector(w)?);
        let l = match x {
            TangentVector::Vector(l) if l.len() == z.len() => l,
            _ => return Err(Error::Precondition("direction must match the Fock dimension".into())),
        };
        // ∂₂ e^{β(z,w)} (λ) = e^{β(z,w)} · β(z, λ)
        Ok(scalar(form2(z, w)?.exp() * form2(z, l)?))
    });
    Ok(k)
}

/// Fock kernel with `β(z, w) = Σ z_j w̄_j` on `ℂ^dim`.
pub fn fock_standard(dim: usize) -> Result<Kernel> {
    if dim == 0 {
        return Err(Error::Precondition("Fock dimension must be positive".into()));
    }
    fock(ComplexMatrix::identity(dim))
}

/// `κ(s, t) = a(s) a(t)*` with `a(s) = (1, s)` on `ℂ²`: positive but nowhere
/// admissible, since every `κ(s, s)` has rank one.
pub fn rank_one_degenerate() -> Kernel {
    Kernel::new("rank-one", 2, Domain::Complex { dim: 1 }, |s, t| {
        let a = |p: &BasePoint| -> Result<ComplexMatrix> {
            Ok(ComplexMatrix::column_vector(&[C64::new(1.0, 0.0), p.scalar_value()?]))
        };
        Ok(&a(s)? * &a(t)?.adjoint())
    })
}

fn vector(p: &BasePoint) -> Result<&[C64]> {
    p.as_vector()
        .ok_or_else(|| Error::Precondition("expected a vector base point".into()))
}
