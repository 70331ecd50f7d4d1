//! Dense double-precision kernels and seeded Gaussian sampling.

mod eig;
mod lu;
mod matrix;
mod qr;
mod rng;
mod svd;

pub use eig::{sym_eig, sym_eigvals, tridiagonal_eigvals, SymEig, SYMMETRY_TOL};
pub use lu::{solve_linear, Lu, PIVOT_TOL};
pub use matrix::DenseMatrix;
pub use qr::{householder_qr, qr_factor, QR_RANK_TOL};
pub use rng::{derive_stream_id, gaussian_matrix, RngStream};
pub use svd::{singular_values, smallest_singular, spectral_norm};

pub(crate) use matrix::{axpy, dot};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("rank deficient: R[{column}][{column}] = {value:e}")]
    RankDeficient { column: usize, value: f64 },
    #[error("matrix is not symmetric: asymmetry {asymmetry:e} at scale {scale:e}")]
    NotSymmetric { asymmetry: f64, scale: f64 },
    #[error("singular matrix: pivot {pivot:e} at scale {scale:e}")]
    SingularMatrix { pivot: f64, scale: f64 },
    #[error("eigenvalue iteration did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
}
