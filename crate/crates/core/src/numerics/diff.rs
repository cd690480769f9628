use super::matrix::C64;
use crate::error::{Error, Result};

/// Default step for the five-point stencil.
pub const DEFAULT_STEP: f64 = 1e-3;

/// Offsets and weights (times `1/h`) of the five-point central stencil.
pub const STENCIL: [(f64, f64); 4] = [
    (-2.0, 1.0 / 12.0),
    (-1.0, -8.0 / 12.0),
    (1.0, 8.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

/// Derivative at 0 of a vector-valued function of one real variable, by the
/// five-point central stencil. Truncation error is `O(h⁴)`.
pub fn directional_derivative<F>(f: F, h: f64) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("step must be positive, got {h}")));
    }
    let eval = |t: f64| -> Result<Vec<C64>> {
        let v = f(t)?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite(format!("function value at t = {t}")));
        }
        Ok(v)
    };
    let (m2, m1, p1, p2) = (eval(-2.0 * h)?, eval(-h)?, eval(h)?, eval(2.0 * h)?);
    if [&m2, &m1, &p2].iter().any(|v| v.len() != p1.len()) {
        return Err(Error::DimensionMismatch("stencil values of unequal length".into()));
    }
    // Symmetric differences first, so constants differentiate to exactly zero.
    Ok((0..p1.len())
        .map(|i| ((p1[i] - m1[i]) * 8.0 - (p2[i] - m2[i])) / (12.0 * h))
        .collect())
}

/// Scalar convenience wrapper around [`directional_derivative`].
pub fn scalar_derivative<F>(f: F, h: f64) -> Result<C64>
where
    F: Fn(f64) -> Result<C64>,
{
    directional_derivative(|t| f(t).map(|z| vec![z]), h).map(|v| v[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_has_zero_derivative() {
        let d = directional_derivative(|_| Ok(vec![c(3.0, -1.0), c(0.5, 2.0)]), 1e-3).unwrap();
        assert!(d.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn linear_is_exact() {
        let v = [c(1.5, -2.0), c(0.0, 4.0)];
        let d = directional_derivative(|t| Ok(v.iter().map(|z| z * t).collect()), 1e-3).unwrap();
        for (a, b) in d.iter().zip(&v) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn exponential_against_analytic_derivative() {
        let v = [c(1.0, 2.0), c(-0.5, 0.25)];
        let d = directional_derivative(|t| Ok(v.iter().map(|z| z * t.exp()).collect()), 1e-3).unwrap();
        for (a, b) in d.iter().zip(&v) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn quartic_is_exact_up_to_round_off() {
        // The stencil annihilates the error term for degree <= 4.
        let p = |t: f64| 2.0 - 3.0 * t + 0.5 * t * t + 7.0 * t.powi(3) - 4.0 * t.powi(4);
        let d = scalar_derivative(|t| Ok(c(p(t), 0.0)), 1e-2).unwrap();
        assert!((d.re + 3.0).abs() < 1e-10 * 3.0);
    }

    #[test]
    fn rejects_bad_step_and_non_finite_values() {
        assert!(directional_derivative(|_| Ok(vec![c(1.0, 0.0)]), 0.0).is_err());
        let r = directional_derivative(|t| Ok(vec![c(1.0 / t.max(0.0), 0.0)]), 1e-3);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }
}
