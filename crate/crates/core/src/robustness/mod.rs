//! Cluster-robustness quantities for block Krylov subspaces.
//!
//! All test matrices are diagonal, `A = diag(Λ₁, …, Λ_d, Λ_⊥)`, so the target
//! invariant subspace is spanned by the leading `bd` canonical vectors. The
//! tangent of the largest principal angle between that subspace and
//! `𝒦_ℓ(A, Ω)` is computed two ways: from an orthonormal Krylov basis, and from
//! the factorization `K = D·Van` of the Krylov matrix.

mod angle;
mod experiment;
mod lowrank;
mod sandwich;
mod spec;
mod trial;

pub use angle::{
    c_omega, chebyshev, chebyshev_accel_check, growth_gd, growth_samples, omega_block_norms,
    tan_angle_krylov, tan_angle_krylov_path, tan_angle_vandermonde, vandermonde_angle,
    ChebyshevCheck, OmegaBlockNorms, VandermondeAngle, ANGLE_SINGULAR_TOL, DEFAULT_GRID,
};
pub use experiment::{
    conjecture_experiment, fit_loglog_slope, probe_solvent_difference, quantile, ConjecturePoint,
    ExperimentFamily, ProbeSummary, QuantileSummary, SlopeFit, Sweep,
};
pub use lowrank::{lowrank_check, lowrank_example, LowRankReport};
pub use sandwich::{sandwich_d2, SandwichResult};
pub use spec::{ClusterSpec, PerpVariant};
pub use trial::{random_bound_spec, structural_bound_trial, RobustnessReport, MAX_RETRIES};

use thiserror::Error;

use crate::lanczos::LanczosError;
use crate::linalg::LinalgError;
use crate::matpoly::MatPolyError;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum RobustnessError {
    #[error("invalid cluster specification: {0}")]
    InvalidSpec(String),
    #[error("relgap must be positive, got {relgap:e}")]
    NonPositiveRelgap { relgap: f64 },
    #[error("n = {n} is not a multiple of b = {b}, or leaves no block outside the cluster")]
    BlockPartition { n: usize, b: usize },
    #[error("Krylov matrix K is singular: sigma_min {smallest:e} at scale {scale:e}")]
    SingularK { smallest: f64, scale: f64 },
    #[error("block {index} of the starting matrix is numerically singular")]
    SingularBlock { index: usize },
    #[error("B1 - B2 is singular: sigma_min {smallest:e} at scale {scale:e}")]
    SingularDifference { smallest: f64, scale: f64 },
    #[error("no gap between the cluster and the rest of the spectrum ({gap:e})")]
    ZeroGap { gap: f64 },
    #[error("gave up after {attempts} degenerate draws: {last}")]
    RetriesExhausted { attempts: usize, last: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
    #[error(transparent)]
    MatPoly(#[from] MatPolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
