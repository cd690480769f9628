use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{BasePoint, TangentVector};
use crate::numerics::{directional_derivative, ComplexMatrix, DEFAULT_STEP};

type BaseFn = dyn Fn(&BasePoint) -> Result<BasePoint> + Send + Sync;
type FiberFn = dyn Fn(&BasePoint) -> Result<ComplexMatrix> + Send + Sync;
type TangentFn = dyn Fn(&BasePoint, &TangentVector) -> Result<TangentVector> + Send + Sync;

/// A morphism `Θ = (δ, ζ)` of trivialized bundles: base map `ζ`, fiberwise
/// linear maps `δ_s: ℂ^M → ℂ^M̃`, and optionally the base tangent map `Tζ`.
#[derive(Clone)]
pub struct BundleMorphism {
    source_fiber_dim: usize,
    target_fiber_dim: usize,
    base_map: Arc<BaseFn>,
    fiber_map: Arc<FiberFn>,
    tangent_map: Option<Arc<TangentFn>>,
}

impl fmt::Debug for BundleMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleMorphism")
            .field("source_fiber_dim", &self.source_fiber_dim)
            .field("target_fiber_dim", &self.target_fiber_dim)
            .field("tangent_map", &self.tangent_map.is_some())
            .finish()
    }
}

impl BundleMorphism {
    pub fn new<B, F>(source_fiber_dim: usize, target_fiber_dim: usize, base_map: B, fiber_map: F) -> Self
    where
        B: Fn(&BasePoint) -> Result<BasePoint> + Send + Sync + 'static,
        F: Fn(&BasePoint) -> Result<ComplexMatrix> + Send + Sync + 'static,
    {
        Self {
            source_fiber_dim,
            target_fiber_dim,
            base_map: Arc::new(base_map),
            fiber_map: Arc::new(fiber_map),
            tangent_map: None,
        }
    }

    pub fn with_tangent_map<T>(mut self, tangent_map: T) -> Self
    where
        T: Fn(&BasePoint, &TangentVector) -> Result<TangentVector> + Send + Sync + 'static,
    {
        self.tangent_map = Some(Arc::new(tangent_map));
        self
    }

    /// Identity base map with a fiber map that does not depend on the point.
    pub fn constant_fiber(fiber: ComplexMatrix) -> Self {
        let (target, source) = fiber.shape();
        Self::new(source, target, |s| Ok(s.clone()), move |_| Ok(fiber.clone())).with_tangent_map(|_, x| Ok(x.clone()))
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant_fiber(ComplexMatrix::identity(dim))
    }

    pub fn source_fiber_dim(&self) -> usize {
        self.source_fiber_dim
    }

    pub fn target_fiber_dim(&self) -> usize {
        self.target_fiber_dim
    }

    /// `ζ(s)`.
    pub fn base(&self, s: &BasePoint) -> Result<BasePoint> {
        (self.base_map)(s)
    }

    /// `δ_s` as an `M̃ × M` matrix.
    pub fn fiber(&self, s: &BasePoint) -> Result<ComplexMatrix> {
        let d = (self.fiber_map)(s)?;
        if d.shape() != (self.target_fiber_dim, self.source_fiber_dim) {
            return Err(Error::DimensionMismatch(format!(
                "fiber map returned {:?}, expected {}x{}",
                d.shape(),
                self.target_fiber_dim,
                self.source_fiber_dim
            )));
        }
        Ok(d)
    }

    /// `Tζ(X)` at `s`. Without an explicit tangent map this is only
    /// available on vector domains, by differentiating `ζ` along `s + tX`.
    pub fn tangent(&self, s: &BasePoint, x: &TangentVector) -> Result<TangentVector> {
        if let Some(t) = &self.tangent_map {
            return t(s, x);
        }
        match (s, x) {
            (BasePoint::Vector(_), TangentVector::Vector(_)) => {
                let v = directional_derivative(
                    |eps| match self.base(&s.along(x, eps)?)? {
                        BasePoint::Vector(v) => Ok(v),
                        _ => Err(Error::Precondition("base map leaves the vector domain".into())),
                    },
                    DEFAULT_STEP,
                )?;
                Ok(TangentVector::Vector(v))
            }
            _ => Err(Error::Precondition(
                "tangent map of the morphism is not available".into(),
            )),
        }
    }

    /// `dδ(X)` at `s`, by the stencil on `ε ↦ δ_{γ(ε)}`.
    pub fn fiber_derivative(&self, s: &BasePoint, x: &TangentVector, h: f64) -> Result<ComplexMatrix> {
        let (r, c) = (self.target_fiber_dim, self.source_fiber_dim);
        let flat = directional_derivative(|eps| Ok(self.fiber(&s.along(x, eps)?)?.data().to_vec()), h)?;
        ComplexMatrix::from_vec(r, c, flat)
    }
}
