use crate::linalg::{gaussian_matrix, DenseMatrix, RngStream};
use crate::matpoly::{chi_quantities, MatPolyError, SolventChain};

use super::angle::{cluster_nodes, growth_gd, vandermonde_angle};
use super::{c_omega, tan_angle_krylov, ClusterSpec, RobustnessError};

/// Extra Gaussian draws allowed when a draw hits a measure-zero degeneracy.
pub const MAX_RETRIES: usize = 5;

/// One draw of `Ω` checked against `tan∠ ≤ c_Ω·G_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessReport {
    pub seed: u64,
    pub stream: u64,
    pub tan_angle_krylov: f64,
    pub tan_angle_vandermonde: f64,
    pub c_omega: f64,
    pub chi_mono: f64,
    pub chi_coef: f64,
    pub g_d: f64,
    pub bound: f64,
    pub bound_holds: bool,
    pub cond_k: f64,
    pub cond_van: f64,
    /// degenerate draws discarded before this one
    pub retries: usize,
}

impl RobustnessReport {
    /// `bound / tan`, the slack of the structural bound.
    pub fn slackness(&self) -> f64 {
        self.bound / self.tan_angle_vandermonde
    }
}

/// Draws `Ω` from `(seed, stream)`, redrawing on singular blocks, a singular
/// `K` or a broken solvent chain, at most [`MAX_RETRIES`] times.
pub fn structural_bound_trial(
    spec: &ClusterSpec,
    seed: u64,
    stream: u64,
    grid: usize,
) -> Result<RobustnessReport, RobustnessError> {
    let mut rng = RngStream::new(seed, stream);
    let mut last = String::new();
    for retries in 0..=MAX_RETRIES {
        let omega = gaussian_matrix(spec.n(), spec.block_size(), &mut rng);
        match evaluate(spec, &omega, grid) {
            Ok(mut r) => {
                r.seed = seed;
                r.stream = stream;
                r.retries = retries;
                return Ok(r);
            }
            Err(e) if is_degenerate(&e) => last = e.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(RobustnessError::RetriesExhausted {
        attempts: MAX_RETRIES + 1,
        last,
    })
}

fn is_degenerate(e: &RobustnessError) -> bool {
    matches!(
        e,
        RobustnessError::SingularK { .. }
            | RobustnessError::SingularBlock { .. }
            | RobustnessError::MatPoly(
                MatPolyError::ChainBreakdown { .. }
                    | MatPolyError::SingularNode { .. }
                    | MatPolyError::DegenerateEndpoint { .. }
            )
    )
}

fn evaluate(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
    grid: usize,
) -> Result<RobustnessReport, RobustnessError> {
    let van = vandermonde_angle(spec, omega)?;
    let c = c_omega(spec, omega)?;
    let nodes = cluster_nodes(spec, omega)?;
    let chains = SolventChain::all(&nodes)?;
    let chi = chi_quantities(&nodes, &chains, spec.interval())?;
    let g_d = growth_gd(spec, &chains, grid)?;
    let krylov = tan_angle_krylov(spec, omega, spec.d())?;
    let bound = c * g_d;
    Ok(RobustnessReport {
        seed: 0,
        stream: 0,
        tan_angle_krylov: krylov,
        tan_angle_vandermonde: van.tan,
        c_omega: c,
        chi_mono: chi.mono,
        chi_coef: chi.coef,
        g_d,
        bound,
        bound_holds: van.tan <= bound * (1.0 + 1e-8),
        cond_k: van.cond_k,
        cond_van: van.cond_van,
        retries: 0,
    })
}

/// A random spec for bound trials: cluster blocks in `[0, 1]` with gaps of at
/// least `0.1/(bd)`, and `n − bd` eigenvalues of `Λ_⊥` split between
/// `[−1, −0.05]` and `[1.05, 2]` in whole blocks of `b`, so no block of `Λ_⊥`
/// straddles the cluster. Requires `n` to be a multiple of `b` with `n > bd`.
pub fn random_bound_spec(
    n: usize,
    b: usize,
    d: usize,
    rng: &mut RngStream,
) -> Result<ClusterSpec, RobustnessError> {
    if b == 0 || d == 0 || !n.is_multiple_of(b) || n <= b * d {
        return Err(RobustnessError::BlockPartition { n, b });
    }
    let q = b * d;
    let mut values = Vec::with_capacity(q);
    let mut x = 0.0;
    for _ in 0..q {
        values.push(x);
        x += 1.0 + rng.uniform();
    }
    let top = values[q - 1].max(f64::MIN_POSITIVE);
    for v in &mut values {
        *v /= top;
    }
    for i in (1..q).rev() {
        let j = ((rng.uniform() * (i + 1) as f64) as usize).min(i);
        values.swap(i, j);
    }
    let lambdas = values
        .chunks(b)
        .map(|c| {
            let mut c = c.to_vec();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    let perp_blocks = n / b - d;
    let below = ((rng.uniform() * (perp_blocks + 1) as f64) as usize).min(perp_blocks);
    let perp = (0..perp_blocks * b)
        .map(|j| {
            let u = rng.uniform();
            if j < below * b {
                -1.0 + 0.95 * u
            } else {
                1.05 + 0.95 * u
            }
        })
        .collect();
    ClusterSpec::with_hull(lambdas, perp)
}
