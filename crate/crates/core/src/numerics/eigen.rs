//! Hermitian eigendecomposition by cyclic Jacobi rotations, and the
//! spectral helpers built on it (threshold pseudo-inverse, matrix functions,
//! dense inverse).

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Sweep cap for the Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;
/// Off-diagonal Frobenius norm at which the iteration stops, relative to `‖M‖`.
pub const OFF_DIAGONAL_TOL: f64 = 1e-14;

/// `M = V diag(values) V*` with ascending eigenvalues and orthonormal columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_spectral(|l| C64::new(l, 0.0))
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply_spectral(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &l) in self.values.iter().enumerate() {
            let w = f(l);
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input is symmetrized as `(M + M*)/2` before iterating, so small
/// asymmetries from upstream round-off are tolerated.
pub fn hermitian_eigh(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let n = m.require_square()?;
    if !m.is_finite() {
        return Err(Error::NonFinite("eigh input".into()));
    }
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.norm();
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: v,
        });
    }
    let target = OFF_DIAGONAL_TOL * scale;

    let mut converged = off_diagonal_norm(&a) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Negligible against the diagonal: drop it rather than rotate.
                if mag <= 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    a[(p, q)] = C64::new(0.0, 0.0);
                    a[(q, p)] = C64::new(0.0, 0.0);
                    continue;
                }
                rotated = true;
                let phase = apq / mag;
                // Real Jacobi rotation on [[app, mag], [mag, aqq]].
                let zeta = (aqq - app) / (2.0 * mag);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
        converged = !rotated || off_diagonal_norm(&a) <= target;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off_norm: off_diagonal_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.select_columns(&order);
    Ok(EigenDecomposition { values, vectors })
}

/// Pseudo-inverse of a Hermitian PSD matrix, zeroing eigenvalues below
/// `tau · λ_max`.
pub fn pinv_threshold(m: &ComplexMatrix, tau: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eigh(m)?;
    let lmax = eig.max_value();
    if lmax <= 0.0 {
        if eig.min_value() < 0.0 {
            return Err(Error::NotPsd {
                min_eigenvalue: eig.min_value(),
            });
        }
        return Ok(ComplexMatrix::zeros(m.rows(), m.cols()));
    }
    let cutoff = tau * lmax;
    if eig.min_value() < -cutoff {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min_value(),
        });
    }
    Ok(eig.apply_spectral(|l| {
        if l >= cutoff && l > 0.0 {
            C64::new(1.0 / l, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// `exp(a)` for anti-Hermitian `a`, via the eigendecomposition of `i·a`.
pub fn expm_anti_hermitian(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.require_square()?;
    // a = -i H with H = i a Hermitian, so exp(a) = V diag(e^{-iλ}) V*.
    let h = a.scale(C64::new(0.0, 1.0));
    let eig = hermitian_eigh(&h)?;
    Ok(eig.apply_spectral(|l| C64::from_polar(1.0, -l)))
}

/// `M^{-1/2}` for Hermitian positive definite `M`.
pub fn inverse_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigh(m)?;
    let lmax = eig.max_value().max(0.0);
    if eig.min_value() <= 1e-14 * lmax || lmax == 0.0 {
        return Err(Error::Singular(format!(
            "inverse square root of matrix with min eigenvalue {:e}",
            eig.min_value()
        )));
    }
    Ok(eig.apply_spectral(|l| C64::new(l.sqrt().recip(), 0.0)))
}

/// Smallest singular value, computed as the square root of the smallest
/// eigenvalue of `M*M`.
pub fn min_singular_value(m: &ComplexMatrix) -> Result<f64> {
    let gram = &m.adjoint() * m;
    let eig = hermitian_eigh(&gram)?;
    Ok(eig.min_value().max(0.0).sqrt())
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
///
/// Fails when a pivot falls below `1e-13 · max|M_ij|`.
pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    let scale = m.max_abs();
    if scale == 0.0 {
        return Err(Error::Singular("zero matrix".into()));
    }
    let mut a = m.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .unwrap_or(col);
        if a[(pivot, col)].norm() <= 1e-13 * scale {
            return Err(Error::Singular(format!("pivot {col} vanishes")));
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a[(col, j)];
                a[(col, j)] = a[(pivot, j)];
                a[(pivot, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = tmp;
            }
        }
        let d = a[(col, col)].inv();
        for j in 0..n {
            a[(col, j)] *= d;
            inv[(col, j)] *= d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let ac = a[(col, j)];
                let ic = inv[(col, j)];
                a[(i, j)] -= f * ac;
                inv[(i, j)] -= f * ic;
            }
        }
    }
    Ok(inv)
}
