use crate::lanczos::{BlockLanczos, LanczosError, LinearOperator};
use crate::linalg::{
    dot, householder_qr, singular_values, spectral_norm, sym_eigvals, DenseMatrix, Lu,
};
use crate::matpoly::{NodeSet, SolventChain, NONSINGULAR_TOL};

use super::{ClusterSpec, RobustnessError};

/// Gate on `σ_min` of the leading rows of an orthonormal basis, and on
/// `σ_min(K)/σ_max(K)`, below which the angle is treated as `π/2`.
pub const ANGLE_SINGULAR_TOL: f64 = 1e-14;

/// Default number of uniform grid points for `G_d`.
pub const DEFAULT_GRID: usize = 1000;

/// `tan∠(range(Q), 𝒦_ℓ(A, Ω))` from an orthonormal block Lanczos basis,
/// `+∞` when the leading `bd` rows of the basis are rank deficient.
///
/// A `b`-column start reaches at most `b` directions of any eigenspace, so an
/// eigenvalue repeated more than `b` times inside the cluster gives `+∞` for
/// every `ℓ`. That case is answered from the spectrum directly: numerically,
/// rounding seeds the missing direction and Lanczos amplifies it by roughly
/// an order of magnitude per step, so the rank test alone loses the marker a
/// few steps past `d`.
pub fn tan_angle_krylov(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
    steps: usize,
) -> Result<f64, RobustnessError> {
    Ok(*tan_angle_krylov_path(spec, omega, steps)?
        .last()
        .expect("at least one step"))
}

/// Tangents for `ℓ = 1..=steps`, sharing one Lanczos run. Entries with
/// `bℓ < bd` are `+∞`.
pub fn tan_angle_krylov_path(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
    steps: usize,
) -> Result<Vec<f64>, RobustnessError> {
    let (n, b) = omega.shape();
    if n != spec.n() || b != spec.block_size() {
        return Err(RobustnessError::InvalidArgument(format!(
            "starting block is {n}x{b}, spec needs {}x{}",
            spec.n(),
            spec.block_size()
        )));
    }
    if steps == 0 || b * steps > n {
        return Err(LanczosError::InvalidSteps { steps, b, n }.into());
    }
    let q = spec.cluster_dim();
    if cluster_multiplicity(spec) > b {
        return Ok(vec![f64::INFINITY; steps]);
    }
    let mut op = LinearOperator::new(spec.operator());
    let mut lanczos = BlockLanczos::new(omega)?;
    let mut out = Vec::with_capacity(steps);
    for ell in 1..=steps {
        lanczos.step(&mut op)?;
        if b * ell < q {
            out.push(f64::INFINITY);
            continue;
        }
        out.push(tan_from_rows(&lanczos.basis().basis_rows(), q));
    }
    Ok(out)
}

/// Largest number of exactly equal eigenvalues inside the cluster.
fn cluster_multiplicity(spec: &ClusterSpec) -> usize {
    let mut values: Vec<f64> = spec.lambdas().iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    values
        .chunk_by(|a, b| a == b)
        .map(<[f64]>::len)
        .max()
        .unwrap_or(0)
}

/// `vt` holds orthonormal vectors as rows. Returns `‖V₂ V₁⁺‖` where `V₁` is
/// the first `q` coordinates and `V₂` the rest. With `P` from a QR
/// factorization of `V₁ᵀ` and `M = V₁P`, this is `‖V₂PM⁻¹‖`, evaluated as the
/// square root of the top eigenvalue of `M⁻ᵀPᵀ(V₂ᵀV₂)PM⁻¹`. The Gram matrix
/// `V₂ᵀV₂` is formed directly so that small angles keep their accuracy.
fn tan_from_rows(vt: &DenseMatrix, q: usize) -> f64 {
    let (k, n) = vt.shape();
    if q == n {
        return 0.0;
    }
    let top_t = vt.submatrix(0, 0, k, q);
    let (p, _) = householder_qr(&top_t);
    let m = top_t.tr_matmul(&p);
    let s = singular_values(&m);
    if s[q - 1] <= ANGLE_SINGULAR_TOL {
        return f64::INFINITY;
    }
    let lu = match Lu::factor(&m.transpose()) {
        Ok(lu) => lu,
        Err(_) => return f64::INFINITY,
    };
    // Wᵀ = M⁻ᵀPᵀ, q×k
    let w_t = lu.solve(&p.transpose());
    let h = DenseMatrix::from_fn(k, k, |i, j| dot(&vt.row(i)[q..], &vt.row(j)[q..]));
    let c = w_t.matmul(&h).matmul(&w_t.transpose());
    let c = c.add(&c.transpose()).scale(0.5);
    match sym_eigvals(&c) {
        Ok(ev) => ev.iter().copied().fold(0.0, f64::max).sqrt(),
        Err(_) => f64::INFINITY,
    }
}

/// Krylov-matrix route with its conditioning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VandermondeAngle {
    pub tan: f64,
    /// 2-norm condition number of `K = D·Van`
    pub cond_k: f64,
    /// 2-norm condition number of `Van`
    pub cond_van: f64,
}

/// `‖K_⊥K⁻¹‖` with `K = D·Van` and `K_⊥ = D_⊥·Van_⊥` formed from the blocks
/// `Bⱼ = Ωⱼ⁻¹ΛⱼΩⱼ` of the partition of `Ω` into `m = n/b` square blocks.
pub fn tan_angle_vandermonde(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
) -> Result<f64, RobustnessError> {
    Ok(vandermonde_angle(spec, omega)?.tan)
}

pub fn vandermonde_angle(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
) -> Result<VandermondeAngle, RobustnessError> {
    let (b, d) = (spec.block_size(), spec.d());
    let m = partition(spec, omega, d)?;
    let diag = spec.diagonal();
    let mut bs = Vec::with_capacity(m);
    for j in 0..m {
        let oj = omega.submatrix(j * b, 0, b, b);
        check_block(&oj, j)?;
        let lu = Lu::factor(&oj).map_err(|_| RobustnessError::SingularBlock { index: j })?;
        bs.push((
            oj.clone(),
            lu.solve(&oj.scale_rows(&diag[j * b..(j + 1) * b])),
        ));
    }
    let van_rows = |range: std::ops::Range<usize>, with_d: bool| {
        let mut out = DenseMatrix::zeros(range.len() * b, d * b);
        for (r, j) in range.enumerate() {
            let (oj, bj) = &bs[j];
            let mut power = if with_d {
                oj.clone()
            } else {
                DenseMatrix::identity(b)
            };
            for c in 0..d {
                out.set_submatrix(r * b, c * b, &power);
                if c + 1 < d {
                    power = power.matmul(bj);
                }
            }
        }
        out
    };
    let van = van_rows(0..d, false);
    let k = van_rows(0..d, true);
    let k_perp = van_rows(d..m, true);
    let sk = singular_values(&k);
    let (scale, smallest) = (sk[0], sk[sk.len() - 1]);
    if smallest <= ANGLE_SINGULAR_TOL * scale {
        return Err(RobustnessError::SingularK { smallest, scale });
    }
    let lu =
        Lu::factor(&k.transpose()).map_err(|_| RobustnessError::SingularK { smallest, scale })?;
    let x_t = lu.solve(&k_perp.transpose());
    let sv = singular_values(&van);
    Ok(VandermondeAngle {
        tan: spectral_norm(&x_t.transpose()),
        cond_k: scale / smallest,
        cond_van: sv[0] / sv[sv.len() - 1],
    })
}

/// `m = n/b`, requiring `m ≥ min_blocks`.
fn partition(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
    min_blocks: usize,
) -> Result<usize, RobustnessError> {
    let (n, b) = (spec.n(), spec.block_size());
    if omega.shape() != (n, b) {
        return Err(RobustnessError::InvalidArgument(format!(
            "starting block is {}x{}, spec needs {n}x{b}",
            omega.rows(),
            omega.cols()
        )));
    }
    match spec.block_count() {
        Some(m) if m >= min_blocks => Ok(m),
        _ => Err(RobustnessError::BlockPartition { n, b }),
    }
}

fn check_block(block: &DenseMatrix, index: usize) -> Result<(f64, f64), RobustnessError> {
    let s = singular_values(block);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if !(lo > NONSINGULAR_TOL * hi) {
        return Err(RobustnessError::SingularBlock { index });
    }
    Ok((hi, lo))
}

/// `‖Ωⱼ‖` and `‖Ωⱼ⁻¹‖` for every block of the partition of `Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaBlockNorms {
    pub norms: Vec<f64>,
    pub inverse_norms: Vec<f64>,
}

pub fn omega_block_norms(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
) -> Result<OmegaBlockNorms, RobustnessError> {
    let b = spec.block_size();
    let m = partition(spec, omega, 1)?;
    let mut norms = Vec::with_capacity(m);
    let mut inverse_norms = Vec::with_capacity(m);
    for j in 0..m {
        let (hi, lo) = check_block(&omega.submatrix(j * b, 0, b, b), j)?;
        norms.push(hi);
        inverse_norms.push(1.0 / lo);
    }
    Ok(OmegaBlockNorms {
        norms,
        inverse_norms,
    })
}

/// `c_Ω = √(dn−bd²) · max_{i≤d}‖Ωᵢ⁻¹‖ · max_{j>d}‖Ωⱼ‖ · max_{j>d}‖Ωⱼ‖‖Ωⱼ⁻¹‖`.
///
/// The factor `max‖Ωⱼ‖` appears twice on purpose: once from `D_⊥` and once
/// from the similarity bound on `‖Φ(Bⱼ)‖`.
pub fn c_omega(spec: &ClusterSpec, omega: &DenseMatrix) -> Result<f64, RobustnessError> {
    let (n, b, d) = (spec.n(), spec.block_size(), spec.d());
    partition(spec, omega, d + 1)?;
    let norms = omega_block_norms(spec, omega)?;
    let head = norms.inverse_norms[..d].iter().copied().fold(0.0, f64::max);
    let tail = norms.norms[d..].iter().copied().fold(0.0, f64::max);
    let tail_cond = norms.norms[d..]
        .iter()
        .zip(&norms.inverse_norms[d..])
        .map(|(a, c)| a * c)
        .fold(0.0, f64::max);
    Ok(((d * n - b * d * d) as f64).sqrt() * head * tail * tail_cond)
}

/// Sample points for `G_d`: every eigenvalue of `Λ_⊥`, `grid` uniform points
/// on `[λ_min, λ_max]` outside the closed cluster interval, and each cluster
/// endpoint that is a limit of outside points.
pub fn growth_samples(spec: &ClusterSpec, grid: usize) -> Vec<f64> {
    let iv = spec.interval();
    let (lo, hi) = (spec.lambda_min(), spec.lambda_max());
    let mut out: Vec<f64> = spec.perp().to_vec();
    if grid > 0 {
        let denom = grid.saturating_sub(1).max(1) as f64;
        out.extend(
            (0..grid)
                .map(|t| lo + (hi - lo) * t as f64 / denom)
                .filter(|&x| !iv.contains(x)),
        );
    }
    if lo < iv.lo {
        out.push(iv.lo);
    }
    if hi > iv.hi {
        out.push(iv.hi);
    }
    out
}

/// `G_d = max_k max_λ ‖F[B_k](λ)‖` over [`growth_samples`].
pub fn growth_gd(
    spec: &ClusterSpec,
    chains: &[SolventChain],
    grid: usize,
) -> Result<f64, RobustnessError> {
    if chains.len() != spec.d() {
        return Err(RobustnessError::InvalidArgument(format!(
            "{} chains for {} cluster blocks",
            chains.len(),
            spec.d()
        )));
    }
    let samples = growth_samples(spec, grid);
    let mut g: f64 = 0.0;
    for chain in chains {
        for &lam in &samples {
            g = g.max(spectral_norm(&chain.eval(lam)));
        }
    }
    Ok(g)
}

/// Node set for the cluster blocks and the first `d` blocks of `Ω`.
pub(crate) fn cluster_nodes(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
) -> Result<NodeSet, RobustnessError> {
    let b = spec.block_size();
    let omegas = (0..spec.d())
        .map(|i| omega.submatrix(i * b, 0, b, b))
        .collect();
    Ok(NodeSet::new(spec.lambdas().to_vec(), omegas)?)
}

/// `Cheb_k(x) = ½((x+√(x²−1))^k + (x+√(x²−1))^{−k})` for `x ≥ 1`.
pub fn chebyshev(k: usize, x: f64) -> f64 {
    let r = x + (x * x - 1.0).max(0.0).sqrt();
    let k = k as i32;
    0.5 * (r.powi(k) + r.powi(-k))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevCheck {
    /// `tan∠(range(Q), 𝒦_ℓ)`
    pub measured: f64,
    /// `tan∠(range(Q), 𝒦_d) / Cheb_{ℓ−d}(1+2γ)`
    pub reference: f64,
    pub tan_d: f64,
    pub cheb: f64,
    pub gamma: f64,
    pub holds: bool,
}

/// Compares the angle after `ℓ` steps with the angle after `d` steps damped
/// by `Cheb_{ℓ−d}(1+2γ)`, `γ = (λ_{bd} − λ_{bd+1})/(λ_max − λ_min)`. The
/// cluster must hold the `bd` largest eigenvalues.
pub fn chebyshev_accel_check(
    spec: &ClusterSpec,
    omega: &DenseMatrix,
    ell: usize,
) -> Result<ChebyshevCheck, RobustnessError> {
    let d = spec.d();
    if ell < d {
        return Err(RobustnessError::InvalidArgument(format!(
            "need ell >= d, got ell={ell} d={d}"
        )));
    }
    let lowest_in = spec
        .lambdas()
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let highest_out = spec
        .perp()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = lowest_in - highest_out;
    if !(gap > 0.0) {
        return Err(RobustnessError::ZeroGap { gap });
    }
    let gamma = gap / (spec.lambda_max() - spec.lambda_min());
    let path = tan_angle_krylov_path(spec, omega, ell)?;
    let (tan_d, measured) = (path[d - 1], path[ell - 1]);
    let cheb = chebyshev(ell - d, 1.0 + 2.0 * gamma);
    let reference = tan_d / cheb;
    Ok(ChebyshevCheck {
        measured,
        reference,
        tan_d,
        cheb,
        gamma,
        holds: measured <= reference * (1.0 + 1e-6),
    })
}
