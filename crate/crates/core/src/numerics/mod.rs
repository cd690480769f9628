//! Dense complex linear algebra and numerical differentiation.

pub mod csv;
pub mod diff;
pub mod eigen;
pub mod matrix;

pub use diff::{directional_derivative, scalar_derivative, DEFAULT_STEP};
pub use eigen::{
    expm_anti_hermitian, hermitian_eigh, inverse, inverse_sqrt_psd, min_singular_value, pinv_threshold,
    EigenDecomposition,
};
pub use matrix::{inner, vec_add, vec_distance, vec_norm, vec_scale, vec_sub, ComplexMatrix, C64};

/// Default tolerance for approximate comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `|a − b| ≤ max(tol, tol · scale)`.
pub fn approx_eq(a: f64, b: f64, tol: f64, scale: f64) -> bool {
    (a - b).abs() <= tol.max(tol * scale.abs())
}

pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
