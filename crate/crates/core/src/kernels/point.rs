use crate::error::{Error, Result};
use crate::grassmann::HermitianProjector;
use crate::numerics::{expm_anti_hermitian, vec_distance, vec_norm, ComplexMatrix, C64};

/// A point of a kernel's parameter manifold.
#[derive(Clone, Debug, PartialEq)]
pub enum BasePoint {
    /// Point of `ℂ^d` (disk, half-plane, Fock domains).
    Vector(Vec<C64>),
    /// Element of a unitary group.
    Unitary(ComplexMatrix),
    /// Point of a Grassmannian.
    Grass(HermitianProjector),
}

/// Tangent direction at a [`BasePoint`], matching its flavor.
#[derive(Clone, Debug, PartialEq)]
pub enum TangentVector {
    /// Real-linear direction in `ℂ^d`; the curve is `s + tX`.
    Vector(Vec<C64>),
    /// Anti-Hermitian `a`; the curve through `u` is `u·exp(ta)`.
    AntiHermitian(ComplexMatrix),
    /// Anti-Hermitian commutator generator `A`; the curve through `p` is `e^{tA} p e^{−tA}`.
    Grass(ComplexMatrix),
}

impl BasePoint {
    pub fn scalar(z: C64) -> Self {
        BasePoint::Vector(vec![z])
    }

    pub fn as_vector(&self) -> Option<&[C64]> {
        match self {
            BasePoint::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_unitary(&self) -> Option<&ComplexMatrix> {
        match self {
            BasePoint::Unitary(u) => Some(u),
            _ => None,
        }
    }

    pub fn as_grass(&self) -> Option<&HermitianProjector> {
        match self {
            BasePoint::Grass(p) => Some(p),
            _ => None,
        }
    }

    /// First coordinate of a vector point.
    pub fn scalar_value(&self) -> Result<C64> {
        match self {
            BasePoint::Vector(v) if !v.is_empty() => Ok(v[0]),
            _ => Err(Error::Precondition("expected a scalar base point".into())),
        }
    }

    /// Point at parameter `t` on the canonical curve through `self` with
    /// initial velocity `x`.
    pub fn along(&self, x: &TangentVector, t: f64) -> Result<BasePoint> {
        match (self, x) {
            (BasePoint::Vector(s), TangentVector::Vector(v)) => {
                if s.len() != v.len() {
                    return Err(Error::DimensionMismatch("point and direction lengths differ".into()));
                }
                Ok(BasePoint::Vector(s.iter().zip(v).map(|(a, b)| a + b * t).collect()))
            }
            (BasePoint::Unitary(u), TangentVector::AntiHermitian(a)) => {
                let e = expm_anti_hermitian(&a.scale_real(t))?;
                Ok(BasePoint::Unitary(u.try_mul(&e)?))
            }
            (BasePoint::Grass(p), TangentVector::Grass(a)) => {
                let e = expm_anti_hermitian(&a.scale_real(t))?;
                Ok(BasePoint::Grass(p.conjugated(&e)?))
            }
            _ => Err(Error::Precondition(
                "tangent vector flavor does not match base point".into(),
            )),
        }
    }

    /// Distance used for duplicate detection.
    pub fn distance(&self, other: &BasePoint) -> f64 {
        match (self, other) {
            (BasePoint::Vector(a), BasePoint::Vector(b)) => vec_distance(a, b),
            (BasePoint::Unitary(a), BasePoint::Unitary(b)) if a.shape() == b.shape() => (a - b).norm(),
            (BasePoint::Grass(a), BasePoint::Grass(b)) if a.dim() == b.dim() => (a.matrix() - b.matrix()).norm(),
            _ => f64::INFINITY,
        }
    }
}

impl TangentVector {
    pub fn scalar(z: C64) -> Self {
        TangentVector::Vector(vec![z])
    }

    pub fn scale(&self, factor: f64) -> TangentVector {
        match self {
            TangentVector::Vector(v) => TangentVector::Vector(v.iter().map(|z| z * factor).collect()),
            TangentVector::AntiHermitian(a) => TangentVector::AntiHermitian(a.scale_real(factor)),
            TangentVector::Grass(a) => TangentVector::Grass(a.scale_real(factor)),
        }
    }

    pub fn add(&self, other: &TangentVector) -> Result<TangentVector> {
        match (self, other) {
            (TangentVector::Vector(a), TangentVector::Vector(b)) if a.len() == b.len() => {
                Ok(TangentVector::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (TangentVector::AntiHermitian(a), TangentVector::AntiHermitian(b)) => {
                Ok(TangentVector::AntiHermitian(a.try_add(b)?))
            }
            (TangentVector::Grass(a), TangentVector::Grass(b)) => Ok(TangentVector::Grass(a.try_add(b)?)),
            _ => Err(Error::Precondition(
                "cannot add tangent vectors of different flavors".into(),
            )),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            TangentVector::Vector(v) => vec_norm(v),
            TangentVector::AntiHermitian(a) | TangentVector::Grass(a) => a.norm(),
        }
    }

    /// Anti-Hermitian residual `‖a + a*‖`; zero for vector directions.
    pub fn anti_hermitian_residual(&self) -> f64 {
        match self {
            TangentVector::Vector(_) => 0.0,
            TangentVector::AntiHermitian(a) | TangentVector::Grass(a) => a.anti_hermitian_residual(),
        }
    }
}
