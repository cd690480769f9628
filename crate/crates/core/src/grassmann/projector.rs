use crate::error::{Error, Result};
use crate::numerics::{inverse_sqrt_psd, vec_norm, ComplexMatrix, C64};

const PROJECTOR_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;

/// A point of a finite Grassmannian: an orthogonal projector `p = p* = p²`
/// together with a deterministic orthonormal basis of its range.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianProjector {
    matrix: ComplexMatrix,
    rank: usize,
    basis: ComplexMatrix,
}

impl HermitianProjector {
    pub fn new(p: ComplexMatrix) -> Result<Self> {
        let n = p.require_square()?;
        let herm = p.hermitian_residual();
        let idem = (&(&p * &p) - &p).norm();
        if herm >= PROJECTOR_TOL || idem >= PROJECTOR_TOL {
            return Err(Error::Precondition(format!(
                "not an orthogonal projector (hermitian residual {herm:e}, idempotence residual {idem:e})"
            )));
        }
        let trace = p.trace().re;
        let rank = trace.round();
        if (trace - rank).abs() >= TRACE_TOL || rank < 0.0 || rank > n as f64 {
            return Err(Error::Precondition(format!(
                "projector trace {trace} is not an integer rank"
            )));
        }
        let rank = rank as usize;
        let basis = range_basis(&p, rank)?;
        Ok(Self { matrix: p, rank, basis })
    }

    /// Projector onto the span of orthonormal columns `b`.
    pub fn from_basis(b: &ComplexMatrix) -> Result<Self> {
        let res = b.unitarity_residual();
        if res >= PROJECTOR_TOL {
            return Err(Error::Precondition(format!(
                "basis columns are not orthonormal (residual {res:e})"
            )));
        }
        Self::new(b * &b.adjoint())
    }

    /// `diag(I_k, 0)` in `ℂ^n`.
    pub fn coordinate(n: usize, rank: usize) -> Result<Self> {
        if rank > n {
            return Err(Error::Precondition(format!("rank {rank} exceeds dimension {n}")));
        }
        let diag: Vec<f64> = (0..n).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
        Self::new(ComplexMatrix::from_real_diag(&diag))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Orthonormal `n × k` basis of the range.
    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    /// `1 − p`.
    pub fn complement(&self) -> ComplexMatrix {
        &ComplexMatrix::identity(self.dim()) - &self.matrix
    }

    /// `u p u*` for unitary `u`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != self.matrix.shape() {
            return Err(Error::DimensionMismatch("unitary and projector sizes differ".into()));
        }
        Self::new(&(u * &self.matrix) * &u.adjoint())
    }

    pub fn project(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.matrix.mat_vec(v)
    }

    /// `‖(1 − p) v‖`, the distance of `v` from the range.
    pub fn range_residual(&self, v: &[C64]) -> Result<f64> {
        Ok(vec_norm(&self.complement().mat_vec(v)?))
    }

    /// Fiber coordinates `B* v` of an ambient vector.
    pub fn coordinates(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.basis.adjoint().mat_vec(v)
    }

    /// Ambient vector `B c` of fiber coordinates.
    pub fn ambient(&self, c: &[C64]) -> Result<Vec<C64>> {
        self.basis.mat_vec(c)
    }
}

/// Eigenvalue-one eigenvectors of `p`, in ascending eigenvalue order, each
/// rotated so that its largest-modulus entry is real and positive.
/// Löwdin-orthonormalized pivot columns `B = pE (E*pE)^{-1/2}`. The pivots
/// are chosen greedily by residual column norm, so `B` depends smoothly on `p`
/// wherever the pivot choice is locally constant.
fn range_basis(p: &ComplexMatrix, rank: usize) -> Result<ComplexMatrix> {
    let n = p.rows();
    let mut chosen: Vec<usize> = Vec::with_capacity(rank);
    let mut ortho: Vec<Vec<C64>> = Vec::with_capacity(rank);
    for _ in 0..rank {
        let mut best: Option<(usize, f64, Vec<C64>)> = None;
        for j in (0..n).filter(|j| !chosen.contains(j)) {
            let mut c = p.column(j);
            for q in &ortho {
                let proj = crate::numerics::inner(&c, q);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= proj * qi;
                }
            }
            let norm = vec_norm(&c);
            // strict comparison with a small margin keeps the choice stable under round-off
            if best.as_ref().is_none_or(|(_, b, _)| norm > b * (1.0 + 1e-12)) {
                best = Some((j, norm, c));
            }
        }
        let (j, norm, c) = best.ok_or_else(|| Error::Precondition("rank exceeds dimension".into()))?;
        if norm < 1e-8 {
            return Err(Error::Singular("projector range is degenerate".into()));
        }
        chosen.push(j);
        ortho.push(c.iter().map(|z| z / norm).collect());
    }
    chosen.sort_unstable();
    let pe = p.select_columns(&chosen);
    let m = ComplexMatrix::from_fn(rank, rank, |a, b| p[(chosen[a], chosen[b])]);
    Ok(&pe * &inverse_sqrt_psd(&m.hermitian_part())?)
}
