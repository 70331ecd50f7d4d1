use crate::lanczos::DiagonalOperator;
use crate::matpoly::ClusterInterval;

use super::RobustnessError;

/// Placement of `Λ_⊥` relative to the cluster in the conjecture experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PerpVariant {
    /// `−1 − j/p` for `j = 1..p`: the cluster holds the largest eigenvalues.
    Exterior,
    /// Half at `−1 − j/h`, half at `4 + j/h`: the cluster sits inside.
    Interior,
}

impl PerpVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exterior => "exterior",
            Self::Interior => "interior",
        }
    }

    /// The `count` eigenvalues of `Λ_⊥`.
    pub fn values(self, count: usize) -> Vec<f64> {
        match self {
            Self::Exterior => (1..=count)
                .map(|j| -1.0 - j as f64 / count as f64)
                .collect(),
            Self::Interior => {
                let low = count - count / 2;
                let high = count / 2;
                let mut v: Vec<f64> = (1..=low).map(|j| -1.0 - j as f64 / low as f64).collect();
                v.extend((1..=high).map(|j| 4.0 + j as f64 / high as f64));
                v
            }
        }
    }
}

impl std::str::FromStr for PerpVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exterior" => Ok(Self::Exterior),
            "interior" => Ok(Self::Interior),
            other => Err(format!(
                "unknown variant '{other}' (expected exterior or interior)"
            )),
        }
    }
}

/// Spectrum of `A = diag(Λ₁, …, Λ_d, Λ_⊥)` with the cluster `Λ` first.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpec {
    block: usize,
    lambdas: Vec<Vec<f64>>,
    perp: Vec<f64>,
    interval: ClusterInterval,
    lambda_min: f64,
    lambda_max: f64,
    relgap: f64,
}

impl ClusterSpec {
    /// Rejects specs whose relgap is not positive.
    pub fn new(
        lambdas: Vec<Vec<f64>>,
        perp: Vec<f64>,
        interval: ClusterInterval,
    ) -> Result<Self, RobustnessError> {
        let spec = Self::new_allowing_degenerate(lambdas, perp, interval)?;
        if !(spec.relgap > 0.0) {
            return Err(RobustnessError::NonPositiveRelgap {
                relgap: spec.relgap,
            });
        }
        Ok(spec)
    }

    /// Cluster interval taken as the hull of `Λ`.
    pub fn with_hull(lambdas: Vec<Vec<f64>>, perp: Vec<f64>) -> Result<Self, RobustnessError> {
        let interval = hull(&lambdas);
        Self::new(lambdas, perp, interval)
    }

    /// Same checks as [`ClusterSpec::new`] except that `relgap = 0` (a shared
    /// eigenvalue between blocks) is accepted. Meant for multiplicity tests.
    pub fn new_allowing_degenerate(
        lambdas: Vec<Vec<f64>>,
        perp: Vec<f64>,
        interval: ClusterInterval,
    ) -> Result<Self, RobustnessError> {
        let block = lambdas.first().map_or(0, Vec::len);
        if block == 0 || lambdas.iter().any(|l| l.len() != block) {
            return Err(RobustnessError::InvalidSpec(
                "need at least one block, all of the same nonzero size".into(),
            ));
        }
        let all = lambdas.iter().flatten().chain(&perp);
        if all.clone().any(|x| !x.is_finite()) || !(interval.lo <= interval.hi) {
            return Err(RobustnessError::InvalidSpec(
                "eigenvalues and interval must be finite".into(),
            ));
        }
        if let Some(x) = lambdas.iter().flatten().find(|&&x| !interval.contains(x)) {
            return Err(RobustnessError::InvalidSpec(format!(
                "cluster eigenvalue {x} outside [{}, {}]",
                interval.lo, interval.hi
            )));
        }
        if let Some(x) = perp.iter().find(|&&x| interval.contains(x)) {
            return Err(RobustnessError::InvalidSpec(format!(
                "eigenvalue {x} of the complement lies inside [{}, {}]",
                interval.lo, interval.hi
            )));
        }
        let lambda_min = all.clone().copied().fold(f64::INFINITY, f64::min);
        let lambda_max = all.copied().fold(f64::NEG_INFINITY, f64::max);
        let mut gap = f64::INFINITY;
        for i in 0..lambdas.len() {
            for j in i + 1..lambdas.len() {
                for a in &lambdas[i] {
                    for c in &lambdas[j] {
                        gap = gap.min((a - c).abs());
                    }
                }
            }
        }
        let width = lambda_max - lambda_min;
        let relgap = if lambdas.len() == 1 {
            f64::INFINITY
        } else if width > 0.0 {
            gap / width
        } else {
            0.0
        };
        Ok(Self {
            block,
            lambdas,
            perp,
            interval,
            lambda_min,
            lambda_max,
            relgap,
        })
    }

    /// `Λₖ` for `k = 1..d` uniformly spaced over `[αk+β(k−1), αk+β(k+1)]/60`,
    /// endpoints included (a single point sits at the midpoint `(α+β)k/60`), and
    /// `n − bd` eigenvalues of `Λ_⊥` from `variant`.
    pub fn conjecture(
        n: usize,
        b: usize,
        d: usize,
        alpha: f64,
        beta: f64,
        variant: PerpVariant,
    ) -> Result<Self, RobustnessError> {
        if b == 0 || d == 0 || b * d > n {
            return Err(RobustnessError::InvalidSpec(format!(
                "need 0 < b*d <= n, got b={b} d={d} n={n}"
            )));
        }
        let lambdas = (1..=d)
            .map(|k| {
                let k = k as f64;
                let lo = (alpha * k + beta * (k - 1.0)) / 60.0;
                let hi = (alpha * k + beta * (k + 1.0)) / 60.0;
                if b == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..b)
                        .map(|t| lo + (hi - lo) * t as f64 / (b - 1) as f64)
                        .collect()
                }
            })
            .collect();
        Self::with_hull(lambdas, variant.values(n - b * d))
    }

    pub fn n(&self) -> usize {
        self.block * self.lambdas.len() + self.perp.len()
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn d(&self) -> usize {
        self.lambdas.len()
    }

    /// `bd`, the dimension of the target subspace.
    pub fn cluster_dim(&self) -> usize {
        self.block * self.lambdas.len()
    }

    pub fn lambda(&self, i: usize) -> &[f64] {
        &self.lambdas[i]
    }

    pub fn lambdas(&self) -> &[Vec<f64>] {
        &self.lambdas
    }

    pub fn perp(&self) -> &[f64] {
        &self.perp
    }

    pub fn interval(&self) -> ClusterInterval {
        self.interval
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Smallest distance between eigenvalues of different cluster blocks over
    /// the spectral width; `∞` for a single block.
    pub fn relgap(&self) -> f64 {
        self.relgap
    }

    /// `m = n/b` when it is an integer.
    pub fn block_count(&self) -> Option<usize> {
        self.n()
            .is_multiple_of(self.block)
            .then(|| self.n() / self.block)
    }

    /// Diagonal of `A`, cluster first.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut diag: Vec<f64> = self.lambdas.iter().flatten().copied().collect();
        diag.extend_from_slice(&self.perp);
        diag
    }

    pub fn operator(&self) -> DiagonalOperator {
        DiagonalOperator::new(self.diagonal())
    }

    /// `cΛ + s` applied to every eigenvalue and to the interval.
    pub fn affine(&self, c: f64, s: f64) -> Result<Self, RobustnessError> {
        if !(c > 0.0) {
            return Err(RobustnessError::InvalidArgument(format!(
                "scale must be positive, got {c}"
            )));
        }
        let map = |v: &[f64]| v.iter().map(|x| c * x + s).collect::<Vec<_>>();
        let interval = ClusterInterval {
            lo: c * self.interval.lo + s,
            hi: c * self.interval.hi + s,
        };
        Self::new_allowing_degenerate(
            self.lambdas.iter().map(|l| map(l)).collect(),
            map(&self.perp),
            interval,
        )
    }

    /// True when some consecutive `b`-block of `Λ_⊥` has eigenvalues on both
    /// sides of the cluster interval.
    pub fn perp_blocks_straddle(&self) -> bool {
        self.perp.chunks(self.block).any(|c| {
            c.iter().any(|&x| x < self.interval.lo) && c.iter().any(|&x| x > self.interval.hi)
        })
    }
}

fn hull(lambdas: &[Vec<f64>]) -> ClusterInterval {
    let lo = lambdas
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = lambdas
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    ClusterInterval { lo, hi }
}
