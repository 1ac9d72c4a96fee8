use serde::{Deserialize, Serialize};

use super::{sym_eig, LinalgError, RealMatrix};

pub const DEFAULT_WHITEN_THRESHOLD: f64 = 1e-9;

/// Projection `Q = Ψ^(-1/2)·Lᵀ` onto the retained eigenvectors of `Σ₁+Σ₂ = L·Ψ·Lᵀ`.
///
/// `q` is `rank × n`; `q·(Σ₁+Σ₂)·qᵀ` is the identity of size `rank`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningProjector {
    pub q: RealMatrix,
    pub rank: usize,
    pub retained_eigenvalues: Vec<f64>,
}

impl WhiteningProjector {
    pub fn n_channels(&self) -> usize {
        self.q.cols()
    }

    /// `Y = Q·X` for an `n × t` data block.
    pub fn project(&self, data: &RealMatrix) -> RealMatrix {
        self.q.matmul(data)
    }

    /// `Q·S·Qᵀ` for an `n × n` matrix.
    pub fn project_cov(&self, s: &RealMatrix) -> RealMatrix {
        self.q.matmul(s).matmul(&self.q.transpose()).symmetrized()
    }

    /// Maps a whitened-space spatial filter back to channel space (`Qᵀ·w`).
    pub fn filter_to_channels(&self, w: &[f64]) -> Vec<f64> {
        self.q.transpose().mul_vec(w)
    }

    /// Right inverse of `Q`, `L·Ψ^(1/2) = Qᵀ·diag(ψ)` (`n × rank`).
    ///
    /// Maps whitened-space patterns back to channel space; `Q·pinv = I`.
    pub fn pattern_map(&self) -> RealMatrix {
        let qt = self.q.transpose();
        RealMatrix::from_fn(qt.rows(), qt.cols(), |i, j| {
            qt.get(i, j) * self.retained_eigenvalues[j]
        })
    }
}

/// Builds the projector from `Σ₁+Σ₂`, keeping eigenvalues above `rel_threshold·λ_max`.
pub fn whitening_projector(
    sigma_sum: &RealMatrix,
    rel_threshold: f64,
) -> Result<WhiteningProjector, LinalgError> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(LinalgError::InvalidArgument(format!(
            "whitening threshold must lie in (0, 1), got {rel_threshold}"
        )));
    }
    let eig = sym_eig(sigma_sum)?;
    let max = eig.values.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Err(LinalgError::DegenerateCovariance);
    }
    let keep: Vec<usize> = (0..eig.len())
        .filter(|&j| eig.values[j] > rel_threshold * max)
        .collect();
    let n = sigma_sum.rows();
    let q = RealMatrix::from_fn(keep.len(), n, |r, c| {
        let j = keep[r];
        eig.vectors.get(c, j) / eig.values[j].sqrt()
    });
    Ok(WhiteningProjector {
        rank: keep.len(),
        retained_eigenvalues: keep.iter().map(|&j| eig.values[j]).collect(),
        q,
    })
}
