//! Block Lanczos with full reorthogonalization and Rayleigh–Ritz extraction.
//!
//! Blocks of vectors are passed around with one vector per row (`b×n`), so
//! that basis vectors stay contiguous in memory.

mod basis;
mod converge;
mod operator;

pub use basis::{block_lanczos, rayleigh_ritz, BlockKrylovBasis, BlockLanczos, RitzSet, Which};
pub use converge::{
    run_until_converged, table1_matvecs, table1_spectrum, Convergence, TABLE1_BETAS,
    TABLE1_BLOCK_SIZES, TABLE1_N, TABLE1_REFERENCE, TABLE1_TARGETS,
};
pub use operator::{DenseOperator, DiagonalOperator, GramOperator, LinearOperator, Operator};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LanczosError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("invalid step count {steps}: need 1 <= steps and b*steps <= n ({b} x {steps} > {n})")]
    InvalidSteps { steps: usize, b: usize, n: usize },
    #[error("block QR broke down at step {step}: R[{column}][{column}] = {value:e}")]
    Breakdown {
        step: usize,
        column: usize,
        value: f64,
    },
    #[error("no convergence within {matvecs} matvecs")]
    NoConvergence { matvecs: usize },
    #[error("operator is not symmetric: |x'Ay - y'Ax| = {defect:e} exceeds {bound:e}")]
    NotSymmetric { defect: f64, bound: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
