use rayon::prelude::*;

use crate::linalg::{
    derive_stream_id, gaussian_matrix, smallest_singular, DenseMatrix, Lu, RngStream,
};

use super::{tan_angle_krylov, ClusterSpec, PerpVariant, RobustnessError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sweep {
    /// `β = 2^{−i}` with `α = 1`
    Beta,
    /// `α = 2^{−i}` with `β = 10⁻⁴`
    Alpha,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Self::Beta => "beta",
            Self::Alpha => "alpha",
        }
    }
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beta" => Ok(Self::Beta),
            "alpha" => Ok(Self::Alpha),
            other => Err(format!("unknown sweep '{other}' (expected beta or alpha)")),
        }
    }
}

/// One sweep of the conjecture experiment: for every `d` in `ds` and every
/// exponent `i`, the block size is `b = bd/d`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentFamily {
    pub sweep: Sweep,
    pub variant: PerpVariant,
    pub n: usize,
    pub bd: usize,
    pub ds: Vec<usize>,
    pub exponents: Vec<u32>,
    /// the parameter held fixed (`α` for the β-sweep, `β` for the α-sweep)
    pub fixed: f64,
}

impl ExperimentFamily {
    /// `n = 1000`, `bd = 60`; β-sweep over `i = 1..12` with `d = 2..5`, α-sweep
    /// over `i = 1..10` with `d = 2..4`.
    pub fn standard(sweep: Sweep, variant: PerpVariant) -> Self {
        let (ds, exponents, fixed) = match sweep {
            Sweep::Beta => (vec![2, 3, 4, 5], (1..=12).collect(), 1.0),
            Sweep::Alpha => (vec![2, 3, 4], (1..=10).collect(), 1e-4),
        };
        Self {
            sweep,
            variant,
            n: 1000,
            bd: 60,
            ds,
            exponents,
            fixed,
        }
    }

    /// `(α, β)` for exponent `i`.
    pub fn parameters(&self, i: u32) -> (f64, f64) {
        let x = 2f64.powi(-(i as i32));
        match self.sweep {
            Sweep::Beta => (self.fixed, x),
            Sweep::Alpha => (x, self.fixed),
        }
    }

    fn validate(&self) -> Result<(), RobustnessError> {
        if self.ds.is_empty() || self.exponents.is_empty() {
            return Err(RobustnessError::InvalidArgument("empty sweep".into()));
        }
        if let Some(d) = self
            .ds
            .iter()
            .find(|&&d| d == 0 || !self.bd.is_multiple_of(d))
        {
            return Err(RobustnessError::InvalidArgument(format!(
                "d = {d} does not divide bd = {}",
                self.bd
            )));
        }
        Ok(())
    }
}

/// Median and quartiles with linear interpolation between order statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantileSummary {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub count: usize,
    /// observations equal to `+∞`
    pub infinite: usize,
}

impl QuantileSummary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            q25: quantile(&s, 0.25),
            median: quantile(&s, 0.5),
            q75: quantile(&s, 0.75),
            count: s.len(),
            infinite: s.iter().filter(|x| **x == f64::INFINITY).count(),
        }
    }
}

/// Quantile `p` of ascending `sorted` at position `(N−1)p`, interpolating
/// linearly. An infinite neighbour with nonzero weight gives `+∞`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let t = h - lo as f64;
    if t == 0.0 || lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if a == b {
        a
    } else if b.is_infinite() {
        b
    } else {
        a + t * (b - a)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjecturePoint {
    pub d: usize,
    pub b: usize,
    pub exponent: u32,
    pub alpha: f64,
    pub beta: f64,
    pub relgap: f64,
    /// `β` for the β-sweep, relgap for the α-sweep
    pub abscissa: f64,
    pub summary: QuantileSummary,
    /// the string the per-trial streams are derived from
    pub canonical: String,
    /// `tan∠` per trial, in trial order
    pub samples: Vec<f64>,
}

/// `tan∠(range(Q), 𝒦_d(A, Ω))` over `trials` Gaussian draws per
/// configuration. Trial `t` of a configuration uses the stream
/// `derive_stream_id(canonical, t)` under `master_seed`, so results do not
/// depend on scheduling.
pub fn conjecture_experiment(
    family: &ExperimentFamily,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ConjecturePoint>, RobustnessError> {
    family.validate()?;
    if trials == 0 {
        return Err(RobustnessError::InvalidArgument(
            "trials must be positive".into(),
        ));
    }
    let mut out = Vec::new();
    for &d in &family.ds {
        let b = family.bd / d;
        for &i in &family.exponents {
            let (alpha, beta) = family.parameters(i);
            let spec = ClusterSpec::conjecture(family.n, b, d, alpha, beta, family.variant)?;
            let canonical = format!(
                "conjecture;variant={};sweep={};n={};b={b};d={d};i={i};alpha={alpha};beta={beta}",
                family.variant.name(),
                family.sweep.name(),
                family.n
            );
            let samples = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RngStream::new(master_seed, derive_stream_id(&canonical, t));
                    let omega = gaussian_matrix(spec.n(), b, &mut rng);
                    tan_angle_krylov(&spec, &omega, d)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let abscissa = match family.sweep {
                Sweep::Beta => beta,
                Sweep::Alpha => spec.relgap(),
            };
            out.push(ConjecturePoint {
                d,
                b,
                exponent: i,
                alpha,
                beta,
                relgap: spec.relgap(),
                abscissa,
                summary: QuantileSummary::from_samples(&samples),
                canonical,
                samples,
            });
        }
    }
    Ok(out)
}

/// Least-squares line through `(log₂ x, log₂ y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// points entering the fit
    pub used: usize,
}

/// Fits `log₂ y` against `log₂ x` after dropping the smallest and largest
/// abscissae and any point with a non-finite or nonpositive coordinate.
/// `None` if fewer than two points remain.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.len() < 3 {
        return None;
    }
    let pts: Vec<(f64, f64)> = pts[1..pts.len() - 1]
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.log2(), y.log2()))
        .collect();
    let k = pts.len();
    if k < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(SlopeFit {
        slope,
        intercept,
        r2,
        used: k,
    })
}

/// Order statistics of `σ_min(Bᵢ − Bⱼ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSummary {
    pub trials: usize,
    pub min: f64,
    pub q01: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q99: f64,
    pub max: f64,
}

/// Samples independent Gaussian `Ωᵢ`, `Ωⱼ` and records the smallest singular
/// value of `Ωᵢ⁻¹ΛᵢΩᵢ − Ωⱼ⁻¹ΛⱼΩⱼ`.
pub fn probe_solvent_difference(
    lambda_i: &[f64],
    lambda_j: &[f64],
    trials: usize,
    master_seed: u64,
) -> Result<ProbeSummary, RobustnessError> {
    let b = lambda_i.len();
    if b == 0 || lambda_j.len() != b || trials == 0 {
        return Err(RobustnessError::InvalidArgument(
            "need equal nonempty spectra and trials >= 1".into(),
        ));
    }
    if let Some(v) = lambda_i.iter().find(|v| lambda_j.contains(v)) {
        return Err(RobustnessError::InvalidArgument(format!(
            "spectra share the eigenvalue {v}"
        )));
    }
    let canonical = format!("probe;b={b};li={lambda_i:?};lj={lambda_j:?}");
    let similar = |lam: &[f64], rng: &mut RngStream| -> Option<DenseMatrix> {
        let o = gaussian_matrix(b, b, rng);
        Lu::factor(&o).ok().map(|lu| lu.solve(&o.scale_rows(lam)))
    };
    let mut samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(master_seed, derive_stream_id(&canonical, t));
            loop {
                if let (Some(bi), Some(bj)) =
                    (similar(lambda_i, &mut rng), similar(lambda_j, &mut rng))
                {
                    return smallest_singular(&bi.sub(&bj));
                }
            }
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    Ok(ProbeSummary {
        trials,
        min: samples[0],
        q01: quantile(&samples, 0.01),
        q25: quantile(&samples, 0.25),
        q50: quantile(&samples, 0.5),
        q75: quantile(&samples, 0.75),
        q99: quantile(&samples, 0.99),
        max: samples[trials - 1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&s, 0.5), 3.0);
        assert_eq!(quantile(&s, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.25), 1.25);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
        assert_eq!(quantile(&[1.0, f64::INFINITY], 0.5), f64::INFINITY);
        assert_eq!(quantile(&[1.0, f64::INFINITY], 0.0), 1.0);
        let q = QuantileSummary::from_samples(&[3.0]);
        assert_eq!((q.q25, q.median, q.q75), (3.0, 3.0, 3.0));
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..=10)
            .map(|i| (2f64.powi(-i), 5.0 * 2f64.powi(2 * i)))
            .collect();
        let fit = fit_loglog_slope(&pts).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert_eq!(fit.used, 8);
        // the extremes are ignored even when they saturate
        let mut sat = pts.clone();
        sat[9].1 = f64::INFINITY;
        sat[0].1 = 0.0;
        assert!((fit_loglog_slope(&sat).unwrap().slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_probe_is_exact() {
        let p = probe_solvent_difference(&[0.3], &[1.0], 50, 1).unwrap();
        assert!((p.min - 0.7).abs() < 1e-15 && (p.max - 0.7).abs() < 1e-15);
        let p = probe_solvent_difference(&[2.0, 2.0], &[5.0, 5.0], 20, 1).unwrap();
        assert!((p.min - 3.0).abs() < 1e-12 && (p.max - 3.0).abs() < 1e-12);
        assert!(p.q01 <= p.q50 && p.q50 <= p.q99);
    }

    #[test]
    fn single_trial_median_is_the_observation() {
        let mut fam = ExperimentFamily::standard(Sweep::Beta, PerpVariant::Exterior);
        fam.n = 200;
        fam.bd = 6;
        fam.ds = vec![2];
        fam.exponents = vec![3];
        let pts = conjecture_experiment(&fam, 1, 42).unwrap();
        let spec = ClusterSpec::conjecture(200, 3, 2, 1.0, 0.125, PerpVariant::Exterior).unwrap();
        let canonical =
            "conjecture;variant=exterior;sweep=beta;n=200;b=3;d=2;i=3;alpha=1;beta=0.125";
        let mut rng = RngStream::new(42, derive_stream_id(canonical, 0));
        let omega = gaussian_matrix(200, 3, &mut rng);
        assert_eq!(
            pts[0].summary.median,
            tan_angle_krylov(&spec, &omega, 2).unwrap()
        );
        assert_eq!(pts[0].summary.count, 1);
    }
}
