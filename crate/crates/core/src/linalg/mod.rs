//! Dense linear algebra used by every trainer: symmetric and symmetric-definite
//! generalized eigendecomposition, the unitary DFT, and the whitening
//! projector that maps rank-deficient covariances onto a full-rank subspace.

mod dft;
mod eigen;
mod matrix;
mod whitening;

pub use dft::{unitary_dft, unitary_dft_fast, UnitaryDft};
pub use eigen::{generalized_eig, sym_eig, EigenPairs, GeneralizedEigSolver};
pub use matrix::{abs_cosine, dot, norm2, ComplexMatrix, RealMatrix};
pub use whitening::{whitening_projector, WhiteningProjector, DEFAULT_WHITEN_THRESHOLD};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    Asymmetric { asymmetry: f64 },

    #[error("symmetric eigensolver did not converge on a {size}x{size} matrix")]
    NonConvergence { size: usize },

    #[error(
        "matrix is not positive definite (min/max eigenvalue ratio {ratio:.3e}); \
         project the data with a WhiteningProjector first"
    )]
    NotPositiveDefinite { ratio: f64 },

    #[error("DFT needs at least 2 samples, got {0}")]
    DftSize(usize),

    #[error("degenerate covariance: no eigenvalue above the whitening threshold")]
    DegenerateCovariance,

    #[error("singular {size}x{size} matrix")]
    Singular { size: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
