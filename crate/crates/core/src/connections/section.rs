use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{BasePoint, TangentVector};
use crate::numerics::{directional_derivative, scalar_derivative, vec_distance, C64, DEFAULT_STEP};

type ValueFn = dyn Fn(&BasePoint) -> Result<Vec<C64>> + Send + Sync;
type DiffFn = dyn Fn(&BasePoint, &TangentVector) -> Result<Vec<C64>> + Send + Sync;
type ScalarFn = dyn Fn(&BasePoint) -> Result<C64> + Send + Sync;
type ScalarDiffFn = dyn Fn(&BasePoint, &TangentVector) -> Result<C64> + Send + Sync;
type PointFn = dyn Fn(f64) -> Result<BasePoint> + Send + Sync;
type VelocityFn = dyn Fn(f64) -> Result<TangentVector> + Send + Sync;

/// Largest tolerated gap between a user-supplied differential and the
/// stencil derivative.
pub const DIFFERENTIAL_MISMATCH_TOL: f64 = 1e-5;

/// A section of a trivial bundle, `s ↦ F(s) ∈ ℂ^M`, with an optional
/// analytic differential.
#[derive(Clone)]
pub struct Section {
    value: Arc<ValueFn>,
    differential: Option<Arc<DiffFn>>,
}

impl fmt::Debug for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Section")
            .field("analytic_differential", &self.differential.is_some())
            .finish()
    }
}

impl Section {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&BasePoint) -> Result<Vec<C64>> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            differential: None,
        }
    }

    pub fn with_differential<D>(mut self, differential: D) -> Self
    where
        D: Fn(&BasePoint, &TangentVector) -> Result<Vec<C64>> + Send + Sync + 'static,
    {
        self.differential = Some(Arc::new(differential));
        self
    }

    pub fn constant(v: Vec<C64>) -> Self {
        let dim = v.len();
        Self::new(move |_| Ok(v.clone())).with_differential(move |_, _| Ok(vec![C64::new(0.0, 0.0); dim]))
    }

    pub fn has_analytic_differential(&self) -> bool {
        self.differential.is_some()
    }

    pub fn value(&self, s: &BasePoint) -> Result<Vec<C64>> {
        (self.value)(s)
    }

    /// `dF(X)` at `s`; analytic when supplied, otherwise the stencil with step `h`.
    pub fn differential(&self, s: &BasePoint, x: &TangentVector, h: f64) -> Result<Vec<C64>> {
        match &self.differential {
            Some(d) => d(s, x),
            None => self.numeric_differential(s, x, h),
        }
    }

    pub fn numeric_differential(&self, s: &BasePoint, x: &TangentVector, h: f64) -> Result<Vec<C64>> {
        directional_derivative(|eps| self.value(&s.along(x, eps)?), h)
    }

    /// Largest gap between the analytic and numeric differentials over the
    /// probes. A gap above [`DIFFERENTIAL_MISMATCH_TOL`] is an error.
    pub fn check_differential(&self, probes: &[(BasePoint, TangentVector)]) -> Result<f64> {
        let Some(d) = &self.differential else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for (s, x) in probes {
            let gap = vec_distance(&d(s, x)?, &self.numeric_differential(s, x, DEFAULT_STEP)?);
            worst = worst.max(gap);
        }
        if worst > DIFFERENTIAL_MISMATCH_TOL {
            return Err(Error::Precondition(format!(
                "supplied differential disagrees with the numeric one by {worst:e}"
            )));
        }
        Ok(worst)
    }

    /// The section `s ↦ f(s) F(s)`.
    pub fn scaled_by(&self, f: &ScalarFunction) -> Section {
        let (sec, fun) = (self.clone(), f.clone());
        let mut out = Section::new(move |s| {
            let c = fun.value(s)?;
            Ok(sec.value(s)?.into_iter().map(|z| z * c).collect())
        });
        if self.differential.is_some() && f.differential.is_some() {
            let (sec, fun) = (self.clone(), f.clone());
            out = out.with_differential(move |s, x| {
                let (c, dc) = (fun.value(s)?, fun.differential(s, x, DEFAULT_STEP)?);
                let v = sec.value(s)?;
                let dv = sec.differential(s, x, DEFAULT_STEP)?;
                Ok(v.iter().zip(&dv).map(|(a, b)| dc * a + c * b).collect())
            });
        }
        out
    }
}

/// A smooth complex-valued function on the base, used for Leibniz checks.
#[derive(Clone)]
pub struct ScalarFunction {
    value: Arc<ScalarFn>,
    differential: Option<Arc<ScalarDiffFn>>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("analytic_differential", &self.differential.is_some())
            .finish()
    }
}

impl ScalarFunction {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&BasePoint) -> Result<C64> + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            differential: None,
        }
    }

    pub fn with_differential<D>(mut self, differential: D) -> Self
    where
        D: Fn(&BasePoint, &TangentVector) -> Result<C64> + Send + Sync + 'static,
    {
        self.differential = Some(Arc::new(differential));
        self
    }

    pub fn constant(c: C64) -> Self {
        Self::new(move |_| Ok(c)).with_differential(|_, _| Ok(C64::new(0.0, 0.0)))
    }

    pub fn value(&self, s: &BasePoint) -> Result<C64> {
        (self.value)(s)
    }

    pub fn differential(&self, s: &BasePoint, x: &TangentVector, h: f64) -> Result<C64> {
        match &self.differential {
            Some(d) => d(s, x),
            None => scalar_derivative(|eps| self.value(&s.along(x, eps)?), h),
        }
    }
}

/// A curve `γ: [0, 1] → base` with optional analytic velocity.
#[derive(Clone)]
pub struct Curve {
    point: Arc<PointFn>,
    velocity: Option<Arc<VelocityFn>>,
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Curve")
            .field("analytic_velocity", &self.velocity.is_some())
            .finish()
    }
}

impl Curve {
    pub fn new<F>(point: F) -> Self
    where
        F: Fn(f64) -> Result<BasePoint> + Send + Sync + 'static,
    {
        Self {
            point: Arc::new(point),
            velocity: None,
        }
    }

    pub fn with_velocity<V>(mut self, velocity: V) -> Self
    where
        V: Fn(f64) -> Result<TangentVector> + Send + Sync + 'static,
    {
        self.velocity = Some(Arc::new(velocity));
        self
    }

    /// `t ↦ start + t·direction`.
    pub fn line(start: Vec<C64>, direction: Vec<C64>) -> Result<Self> {
        if start.len() != direction.len() {
            return Err(Error::DimensionMismatch(
                "curve start and direction lengths differ".into(),
            ));
        }
        let dir = direction.clone();
        Ok(Self::new(move |t| {
            Ok(BasePoint::Vector(
                start.iter().zip(&direction).map(|(a, b)| a + b * t).collect(),
            ))
        })
        .with_velocity(move |_| Ok(TangentVector::Vector(dir.clone()))))
    }

    pub fn constant(s: BasePoint) -> Self {
        let zero = match &s {
            BasePoint::Vector(v) => TangentVector::Vector(vec![C64::new(0.0, 0.0); v.len()]),
            BasePoint::Unitary(u) => TangentVector::AntiHermitian(u.scale_real(0.0)),
            BasePoint::Grass(p) => TangentVector::Grass(p.matrix().scale_real(0.0)),
        };
        Self::new(move |_| Ok(s.clone())).with_velocity(move |_| Ok(zero.clone()))
    }

    pub fn point(&self, t: f64) -> Result<BasePoint> {
        (self.point)(t)
    }

    /// `γ̇(t)`; numeric fallback only on vector domains.
    pub fn velocity(&self, t: f64) -> Result<TangentVector> {
        if let Some(v) = &self.velocity {
            return v(t);
        }
        let v = directional_derivative(
            |eps| match self.point(t + eps)? {
                BasePoint::Vector(v) => Ok(v),
                _ => Err(Error::Precondition(
                    "curve velocity must be supplied off vector domains".into(),
                )),
            },
            DEFAULT_STEP,
        )?;
        Ok(TangentVector::Vector(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    fn square() -> Section {
        Section::new(|s| Ok(vec![s.scalar_value()?.powi(2)]))
    }

    #[test]
    fn numeric_differential_of_square() {
        let s = BasePoint::scalar(c64(0.3, 0.4));
        let x = TangentVector::scalar(c64(0.0, 1.0));
        let d = square().differential(&s, &x, 1e-3).unwrap();
        assert!((d[0] - c64(0.0, 2.0) * c64(0.3, 0.4)).norm() < 1e-12);
    }

    #[test]
    fn wrong_differential_is_caught() {
        let bad = square().with_differential(|s, _| Ok(vec![s.scalar_value()?]));
        let probes = vec![(BasePoint::scalar(c64(0.3, 0.4)), TangentVector::scalar(c64(1.0, 0.0)))];
        assert!(bad.check_differential(&probes).is_err());
        let good = square().with_differential(|s, x| {
            let TangentVector::Vector(v) = x else { unreachable!() };
            Ok(vec![2.0 * s.scalar_value()? * v[0]])
        });
        assert!(good.check_differential(&probes).unwrap() < 1e-10);
    }

    #[test]
    fn scaled_section_product_rule() {
        let f = ScalarFunction::new(|s| Ok(s.scalar_value()? + 1.0)).with_differential(|_, x| {
            let TangentVector::Vector(v) = x else { unreachable!() };
            Ok(v[0])
        });
        let sec = Section::constant(vec![c64(2.0, 0.0)]);
        let g = sec.scaled_by(&f);
        assert!(g.has_analytic_differential());
        let s = BasePoint::scalar(c64(0.1, 0.0));
        let x = TangentVector::scalar(c64(0.0, 1.0));
        assert_eq!(g.differential(&s, &x, 1e-3).unwrap(), vec![c64(0.0, 2.0)]);
    }

    #[test]
    fn curve_velocities() {
        let c = Curve::line(vec![c64(0.0, 0.0)], vec![c64(0.5, 0.0)]).unwrap();
        assert_eq!(c.point(1.0).unwrap(), BasePoint::scalar(c64(0.5, 0.0)));
        let numeric = Curve::new(|t| Ok(BasePoint::scalar(c64(t * t, 0.0))));
        let TangentVector::Vector(v) = numeric.velocity(0.5).unwrap() else {
            unreachable!()
        };
        assert!((v[0] - c64(1.0, 0.0)).norm() < 1e-12);
    }
}
