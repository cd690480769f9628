//! Seeded random generators for matrices, vectors and unitaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{inner, vec_norm, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| gaussian_complex(rng)).collect()
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    gaussian_matrix(rng, n, n).hermitian_part()
}

pub fn random_anti_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, n);
    (&g - &g.adjoint()).scale_real(0.5)
}

/// `G G*` for a Gaussian `n × rank` factor `G`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, n, rank);
    &g * &g.adjoint()
}

/// Orthonormalizes the columns with two passes of modified Gram-Schmidt.
pub fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for k in 0..j {
                let proj = inner(&cols[j], &cols[k]);
                let (head, tail) = cols.split_at_mut(j);
                for (x, y) in tail[0].iter_mut().zip(&head[k]) {
                    *x -= proj * y;
                }
            }
        }
        let norm = vec_norm(&cols[j]);
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_columns(&cols).expect("columns share a length")
}

pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    orthonormalize_columns(&gaussian_matrix(rng, n, n))
}

/// Deterministic unitary for a given seed.
pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(&mut seeded_rng(seed), n)
}

/// Uniform sample from the open disk of the given radius.
pub fn random_disk_point<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    C64::from_polar(r, theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitaries_are_unitary_and_deterministic() {
        let u1 = random_unitary(1, 4);
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
        for n in 1..=8 {
            let u = random_unitary(n, 100 + n as u64);
            assert!(u.unitarity_residual() < 1e-12, "n={n}");
        }
        assert_eq!(random_unitary(4, 7), random_unitary(4, 7));
        assert_ne!(random_unitary(4, 7), random_unitary(4, 8));
    }

    #[test]
    fn anti_hermitian_generator() {
        let a = random_anti_hermitian(&mut seeded_rng(1), 4);
        assert!(a.anti_hermitian_residual() < 1e-15);
    }
}
