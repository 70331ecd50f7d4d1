use crate::linalg::{gaussian_matrix, DenseMatrix, RngStream};

use super::basis::ritz_range;
use super::{BlockLanczos, DiagonalOperator, LanczosError, LinearOperator, RitzSet};

pub const TABLE1_N: usize = 2000;
pub const TABLE1_TARGETS: usize = 32;
pub const TABLE1_BETAS: [f64; 4] = [1.0, 0.1, 0.01, 0.001];
pub const TABLE1_BLOCK_SIZES: [usize; 6] = [1, 2, 4, 8, 16, 32];

/// Published matvec counts, rows by `TABLE1_BETAS`, columns by
/// `TABLE1_BLOCK_SIZES`.
pub const TABLE1_REFERENCE: [[usize; 6]; 4] = [
    [75, 86, 100, 136, 208, 352],
    [115, 126, 140, 176, 240, 352],
    [156, 166, 176, 208, 256, 384],
    [196, 204, 212, 240, 288, 384],
];

#[derive(Clone, Debug)]
pub struct Convergence {
    pub matvecs: usize,
    pub steps: usize,
    /// Ritz pairs matched to the targets
    pub ritz: RitzSet,
}

/// Runs block Lanczos one block at a time until the sorted targets are
/// matched index-wise by a window of consecutive sorted Ritz values, each
/// within absolute `tol`.
pub fn run_until_converged(
    op: &mut LinearOperator,
    omega: &DenseMatrix,
    targets: &[f64],
    tol: f64,
    max_matvecs: usize,
) -> Result<Convergence, LanczosError> {
    if targets.is_empty() {
        return Err(LanczosError::InvalidArgument(
            "no target eigenvalues".into(),
        ));
    }
    if omega.rows() != op.dim() {
        return Err(LanczosError::DimensionMismatch {
            expected: format!("{} rows in the starting block", op.dim()),
            got: format!("{}", omega.rows()),
        });
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (n, b) = omega.shape();
    let start = op.matvecs();
    let mut lanczos = BlockLanczos::new(omega)?;
    loop {
        let used = op.matvecs() - start;
        let steps = lanczos.basis().steps();
        if used + b > max_matvecs || (steps + 1) * b > n {
            return Err(LanczosError::NoConvergence { matvecs: used });
        }
        lanczos.step(op)?;
        let values = lanczos.basis().ritz_values()?;
        if let Some(offset) = matching_window(&values, &sorted, tol) {
            let ritz = ritz_range(lanczos.basis(), offset, sorted.len())?;
            return Ok(Convergence {
                matvecs: op.matvecs() - start,
                steps: steps + 1,
                ritz,
            });
        }
    }
}

/// Offset of the window of `values` that matches `targets` best, if its
/// worst error is within `tol`. Both slices ascend.
fn matching_window(values: &[f64], targets: &[f64], tol: f64) -> Option<usize> {
    let p = targets.len();
    if values.len() < p {
        return None;
    }
    (0..=values.len() - p)
        .map(|o| {
            let err = values[o..o + p]
                .iter()
                .zip(targets)
                .map(|(v, t)| (v - t).abs())
                .fold(0.0, f64::max);
            (o, err)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|&(_, err)| err <= tol)
        .map(|(o, _)| o)
}

/// Spectrum of the test matrix: `1968` values evenly spaced over `[−1, 0]`,
/// endpoints included, then the `32` targets evenly spaced over `[1, 1+β]`.
pub fn table1_spectrum(beta: f64) -> (Vec<f64>, Vec<f64>) {
    let rest = TABLE1_N - TABLE1_TARGETS;
    let targets: Vec<f64> = (0..TABLE1_TARGETS)
        .map(|i| 1.0 + beta * i as f64 / (TABLE1_TARGETS - 1) as f64)
        .collect();
    let mut diag: Vec<f64> = (0..rest)
        .map(|j| -1.0 + j as f64 / (rest - 1) as f64)
        .collect();
    diag.extend_from_slice(&targets);
    (diag, targets)
}

/// Matvecs needed for one table1 cell with a Gaussian start drawn from
/// `(seed, stream)`.
pub fn table1_matvecs(beta: f64, b: usize, seed: u64, stream: u64) -> Result<usize, LanczosError> {
    let (diag, targets) = table1_spectrum(beta);
    let mut op = LinearOperator::new(DiagonalOperator::new(diag));
    let omega = gaussian_matrix(TABLE1_N, b, &mut RngStream::new(seed, stream));
    Ok(run_until_converged(&mut op, &omega, &targets, 1e-10, TABLE1_N)?.matvecs)
}
