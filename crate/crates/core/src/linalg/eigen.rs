use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::{LinalgError, RealMatrix};

/// Relative asymmetry tolerated by the symmetric solvers.
const SYMMETRY_TOL: f64 = 1e-10;
/// `b` must satisfy `λ_min > SPD_TOL · λ_max`.
const SPD_TOL: f64 = 1e-12;
const MAX_QR_ITERS: usize = 100_000;

/// Eigenvalues in non-increasing order with matching eigenvector columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: RealMatrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

fn check_symmetric(s: &RealMatrix) -> Result<(), LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::Dimension(format!(
            "expected a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    if s.data().iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let scale = s.max_abs();
    if scale > 0.0 {
        let rel = s.max_asymmetry() / scale;
        if rel > SYMMETRY_TOL {
            return Err(LinalgError::Asymmetric { asymmetry: rel });
        }
    }
    Ok(())
}

/// Flips each column so that its largest-magnitude entry is positive.
fn canonical_signs(vectors: &mut RealMatrix) {
    for j in 0..vectors.cols() {
        let mut best = 0.0f64;
        for i in 0..vectors.rows() {
            let v = vectors.get(i, j);
            if v.abs() > best.abs() {
                best = v;
            }
        }
        if best < 0.0 {
            for i in 0..vectors.rows() {
                vectors.set(i, j, -vectors.get(i, j));
            }
        }
    }
}

/// Eigendecomposition of a real symmetric matrix, values descending.
pub fn sym_eig(s: &RealMatrix) -> Result<EigenPairs, LinalgError> {
    check_symmetric(s)?;
    let n = s.rows();
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: RealMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(s.symmetrized().to_nalgebra(), f64::EPSILON, MAX_QR_ITERS)
        .ok_or(LinalgError::NonConvergence { size: n })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = RealMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let norm = col.norm();
        for i in 0..n {
            vectors.set(i, j, col[i] / norm);
        }
    }
    if values.iter().any(|v| !v.is_finite()) || vectors.data().iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonConvergence { size: n });
    }
    canonical_signs(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Solver for `a·v = λ·b·v` with a fixed symmetric positive-definite `b`.
///
/// `b` is factored once as `b = L·Λ·Lᵀ`; each solve reduces to a symmetric
/// problem in the coordinates `W = L·Λ^(-1/2)`, so repeated solves against the
/// same `b` (as in the alternating optimizer) only pay for one eigensolve.
#[derive(Debug, Clone)]
pub struct GeneralizedEigSolver {
    whitener: RealMatrix,
}

impl GeneralizedEigSolver {
    pub fn new(b: &RealMatrix) -> Result<Self, LinalgError> {
        let eig = sym_eig(b)?;
        let n = b.rows();
        let max = eig.values.first().copied().unwrap_or(0.0);
        let min = eig.values.last().copied().unwrap_or(0.0);
        if n == 0 || max <= 0.0 || min <= SPD_TOL * max {
            let ratio = if max > 0.0 { min / max } else { 0.0 };
            return Err(LinalgError::NotPositiveDefinite { ratio });
        }
        let whitener = RealMatrix::from_fn(n, n, |i, j| eig.vectors.get(i, j) / eig.values[j].sqrt());
        Ok(Self { whitener })
    }

    pub fn dim(&self) -> usize {
        self.whitener.rows()
    }

    /// Eigenpairs of the pencil `(a, b)`, values descending, vectors with `vᵀ·b·v = 1`.
    pub fn solve(&self, a: &RealMatrix) -> Result<EigenPairs, LinalgError> {
        check_symmetric(a)?;
        if a.rows() != self.dim() {
            return Err(LinalgError::Dimension(format!(
                "pencil mismatch: a is {}x{}, b is {}x{}",
                a.rows(),
                a.cols(),
                self.dim(),
                self.dim()
            )));
        }
        let reduced = self
            .whitener
            .transpose()
            .matmul(a)
            .matmul(&self.whitener)
            .symmetrized();
        let inner = sym_eig(&reduced)?;
        let mut vectors = self.whitener.matmul(&inner.vectors);
        canonical_signs(&mut vectors);
        Ok(EigenPairs {
            values: inner.values,
            vectors,
        })
    }
}

/// Symmetric-definite generalized eigendecomposition `a·v = λ·b·v`.
pub fn generalized_eig(a: &RealMatrix, b: &RealMatrix) -> Result<EigenPairs, LinalgError> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(LinalgError::Dimension(format!(
            "a is {}x{}, b is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    GeneralizedEigSolver::new(b)?.solve(a)
}
