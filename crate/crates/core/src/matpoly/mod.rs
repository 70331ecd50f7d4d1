//! Matrix polynomials with right-side coefficients, block Vandermonde
//! interpolation and fundamental matrix polynomials.
//!
//! Node indices are 0-based throughout.

mod chain;
mod nodes;
mod polynomial;

pub use chain::{
    chi_quantities, growth_bound_check, ChiQuantities, ClusterInterval, GrowthSample, SolventChain,
};
pub use nodes::{block_vandermonde, fundamental_via_solve, NodeSet, NONSINGULAR_TOL};
pub use polynomial::{similarity_bound, MatrixPolynomial, SimilarityBound};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatPolyError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },
    #[error("a matrix polynomial needs at least one coefficient")]
    EmptyPolynomial,
    #[error("nodes {i} and {j} share the eigenvalue {value}")]
    OverlappingSpectra { i: usize, j: usize, value: f64 },
    #[error("eigenvector matrix of node {index} is numerically singular")]
    SingularNode { index: usize },
    #[error("block Vandermonde matrix is singular: sigma_min {smallest:e} at scale {scale:e}")]
    SingularVandermonde { smallest: f64, scale: f64 },
    #[error("solvent chain broke down at position {position}: sigma_min {smallest:e} at scale {scale:e}")]
    ChainBreakdown {
        position: usize,
        smallest: f64,
        scale: f64,
    },
    #[error("cluster endpoint {endpoint} coincides with the spectrum of chain position {position} (k = {k})")]
    DegenerateEndpoint {
        k: usize,
        position: usize,
        endpoint: f64,
    },
    #[error("node index {k} out of range for {d} nodes")]
    NodeIndex { k: usize, d: usize },
    #[error("eigenvalue {value} of node {node} lies outside the cluster interval")]
    SpectrumOutsideInterval { node: usize, value: f64 },
    #[error("sample {lambda} lies inside the cluster interval")]
    SampleInsideInterval { lambda: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
