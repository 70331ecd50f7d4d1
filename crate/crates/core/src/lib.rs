//! Randomized small-block Lanczos (RSBL) and the matrix-polynomial machinery
//! behind its cluster-robustness analysis.
//!
//! * [`linalg`]: dense kernels (QR, symmetric eigensolver, SVD, LU) and
//!   reproducible Gaussian streams.
//! * [`matpoly`]: matrix polynomials with right-side coefficients, block
//!   Vandermonde interpolation and the chain-of-solvents construction of
//!   fundamental matrix polynomials.
//! * [`lanczos`]: block Lanczos with full reorthogonalization, Rayleigh–Ritz
//!   extraction and matvec-count convergence runs.
//! * [`robustness`]: principal-angle quantities for clustered spectra, the
//!   structural bound `tan∠ ≤ c_Ω·G_d`, and Monte Carlo experiment drivers.

// `!(x > y)` is used on purpose so that NaN falls into the rejecting branch
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod lanczos;
pub mod linalg;
pub mod matpoly;
pub mod robustness;

pub use linalg::{DenseMatrix, LinalgError, RngStream};
