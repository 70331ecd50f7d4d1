use crate::lanczos::{block_lanczos, rayleigh_ritz, GramOperator, LinearOperator, Which};
use crate::linalg::{gaussian_matrix, householder_qr, singular_values, DenseMatrix, RngStream};

use super::RobustnessError;

/// Low-rank approximation from the top `bd` Ritz vectors of `ÂᵀÂ`, next to
/// the best rank-`bd` errors. Observational only.
#[derive(Clone, Debug, PartialEq)]
pub struct LowRankReport {
    pub rank: usize,
    pub epsilon: f64,
    pub spectral_error: f64,
    pub frobenius_error: f64,
    pub best_spectral: f64,
    pub best_frobenius: f64,
    pub spectral_ratio: f64,
    pub frobenius_ratio: f64,
    pub spectral_holds: bool,
    pub frobenius_holds: bool,
    /// `|‖Âvᵢ‖² − λᵢ|` for the Ritz vectors, largest first
    pub eigen_deviation: Vec<f64>,
    /// `ε λ_{bd+1}`
    pub eigen_bound: f64,
    pub eigen_holds: bool,
}

/// Runs `ℓ` block Lanczos steps on `A = ÂᵀÂ` (never formed) from a Gaussian
/// `n×b` start drawn from `rng`.
pub fn lowrank_check(
    a_hat: &DenseMatrix,
    b: usize,
    d: usize,
    ell: usize,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<LowRankReport, RobustnessError> {
    let (big_n, n) = a_hat.shape();
    if big_n < n {
        return Err(RobustnessError::InvalidArgument(format!(
            "need N >= n, got {big_n}x{n}"
        )));
    }
    let rank = b * d;
    if rank == 0 || rank > b * ell {
        return Err(RobustnessError::InvalidArgument(format!(
            "need 0 < bd <= b*ell, got b={b} d={d} ell={ell}"
        )));
    }
    let mut op = LinearOperator::new(GramOperator::new(a_hat.clone()));
    let omega = gaussian_matrix(n, b, rng);
    let basis = block_lanczos(&mut op, &omega, ell)?;
    let ritz = rayleigh_ritz(&basis, rank, Which::Largest)?;
    let v = ritz.vectors;
    let av = a_hat.matmul(&v);
    let resid = a_hat.sub(&av.matmul(&v.transpose()));
    let spectral_error = singular_values(&resid).first().copied().unwrap_or(0.0);
    let frobenius_error = resid.frobenius_norm();

    let sigma = singular_values(a_hat);
    let best_spectral = sigma.get(rank).copied().unwrap_or(0.0);
    let best_frobenius = sigma.iter().skip(rank).map(|s| s * s).sum::<f64>().sqrt();
    let floor = 1e-12 * sigma.first().copied().unwrap_or(0.0);
    let ratio = |err: f64, best: f64| {
        if best <= floor && err <= floor {
            1.0
        } else {
            err / best
        }
    };
    let eigen_bound = epsilon * best_spectral * best_spectral;
    let eigen_deviation: Vec<f64> = (0..rank)
        .map(|i| {
            let col = rank - 1 - i;
            let norm2: f64 = av.column(col).iter().map(|x| x * x).sum();
            (norm2 - sigma.get(i).map_or(0.0, |s| s * s)).abs()
        })
        .collect();
    let lambda_floor = 1e-12 * sigma.first().map_or(0.0, |s| s * s);
    Ok(LowRankReport {
        rank,
        epsilon,
        spectral_error,
        frobenius_error,
        best_spectral,
        best_frobenius,
        spectral_ratio: ratio(spectral_error, best_spectral),
        frobenius_ratio: ratio(frobenius_error, best_frobenius),
        spectral_holds: spectral_error <= (1.0 + epsilon) * best_spectral + floor,
        frobenius_holds: frobenius_error <= (1.0 + epsilon) * best_frobenius + floor,
        eigen_holds: eigen_deviation
            .iter()
            .all(|&e| e <= eigen_bound + lambda_floor),
        eigen_deviation,
        eigen_bound,
    })
}

/// `N×n` matrix with singular values `singular` (padded with zeros), rotated
/// by random orthogonal factors when `rotation` is given.
pub fn lowrank_example(
    big_n: usize,
    n: usize,
    singular: &[f64],
    rotation: Option<&mut RngStream>,
) -> Result<DenseMatrix, RobustnessError> {
    if big_n < n || singular.len() > n {
        return Err(RobustnessError::InvalidArgument(format!(
            "need N >= n >= {} singular values, got {big_n}x{n}",
            singular.len()
        )));
    }
    let mut s = DenseMatrix::zeros(big_n, n);
    for (i, &x) in singular.iter().enumerate() {
        s.set(i, i, x);
    }
    Ok(match rotation {
        None => s,
        Some(rng) => {
            let u = householder_qr(&gaussian_matrix(big_n, big_n, rng)).0;
            let v = householder_qr(&gaussian_matrix(n, n, rng)).0;
            u.matmul(&s).matmul(&v.transpose())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthogonal_full_rank() {
        let mut rng = RngStream::new(4, 0);
        let q = householder_qr(&gaussian_matrix(8, 8, &mut rng)).0;
        // ÂᵀÂ = I, so one block of size n is the only breakdown-free choice
        let r = lowrank_check(&q, 8, 1, 1, 0.1, &mut rng).unwrap();
        assert!(r.spectral_error < 1e-12 && r.frobenius_error < 1e-12);
        assert_eq!((r.best_spectral, r.best_frobenius), (0.0, 0.0));
        assert_eq!(r.spectral_ratio, 1.0);
    }

    #[test]
    fn full_krylov_space_is_optimal() {
        let mut rng = RngStream::new(5, 0);
        let sv: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        let a = lowrank_example(12, 10, &sv, Some(&mut rng)).unwrap();
        let r = lowrank_check(&a, 2, 2, 5, 0.1, &mut rng).unwrap();
        assert!((r.spectral_ratio - 1.0).abs() < 1e-10, "{r:?}");
        assert!((r.frobenius_ratio - 1.0).abs() < 1e-10, "{r:?}");
        assert!((r.best_spectral - 6.0).abs() < 1e-12);
    }

    #[test]
    fn padded_diagonal_example() {
        let sv: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        let a = lowrank_example(20, 16, &sv, None).unwrap();
        let r = lowrank_check(&a, 2, 2, 6, 0.1, &mut RngStream::new(6, 0)).unwrap();
        assert!(r.spectral_holds, "{r:?}");
        assert_eq!(r.epsilon, 0.1);
    }
}
