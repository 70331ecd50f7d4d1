use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rsbl_core::linalg::{derive_stream_id, RngStream};
use rsbl_core::robustness::{
    quantile, random_bound_spec, structural_bound_trial, RobustnessReport,
};
use serde::Serialize;

use super::{Failure, Outcome};
use crate::output::{write_csv, ResultRow};
use crate::{CliError, Command, ConfigError, ExperimentConfig};

/// Route comparison is skipped above this condition number of `K`.
const ROUTE_COND_LIMIT: f64 = 1e8;
const ROUTE_REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundTrial {
    pub b: usize,
    pub d: usize,
    pub n: usize,
    pub trial: usize,
    pub canonical: String,
    /// `Err` holds the message of a trial that exhausted its redraws
    pub report: Result<RobustnessReport, String>,
}

/// `Some(agree)` when both routes are finite and `K` is well conditioned.
pub fn route_agreement(r: &RobustnessReport) -> Option<bool> {
    let (k, v) = (r.tan_angle_krylov, r.tan_angle_vandermonde);
    (k.is_finite() && v.is_finite() && r.cond_k < ROUTE_COND_LIMIT)
        .then(|| (k - v).abs() <= ROUTE_REL_TOL * v)
}

/// `trials` random specs for every (b, d), with `n` rounded down to a
/// multiple of `b`. The spec of trial `t` comes from stream
/// `derive_stream_id(canonical + ";spec", t)` and `Ω` from
/// `derive_stream_id(canonical, t)`.
pub fn bound_trials(config: &ExperimentConfig) -> Result<Vec<BoundTrial>, CliError> {
    let mut jobs = Vec::new();
    for &b in &config.b {
        for &d in &config.d {
            let n = config.n - config.n % b;
            if n <= b * d {
                return Err(ConfigError::Invalid(format!(
                    "n = {} is too small for b = {b}, d = {d}",
                    config.n
                ))
                .into());
            }
            let canonical = format!("bound-verify;n={n};b={b};d={d};grid={}", config.grid);
            jobs.extend((0..config.trials).map(|t| (b, d, n, t, canonical.clone())));
        }
    }
    jobs.into_par_iter()
        .map(|(b, d, n, trial, canonical)| {
            let mut rng = RngStream::new(
                config.seed,
                derive_stream_id(&format!("{canonical};spec"), trial as u64),
            );
            let spec = random_bound_spec(n, b, d, &mut rng)?;
            let stream = derive_stream_id(&canonical, trial as u64);
            let report = structural_bound_trial(&spec, config.seed, stream, config.grid)
                .map_err(|e| e.to_string());
            Ok(BoundTrial {
                b,
                d,
                n,
                trial,
                canonical,
                report,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct TrialRow {
    b: usize,
    d: usize,
    n: usize,
    trial: usize,
    seed: u64,
    stream: u64,
    tan_krylov: Option<f64>,
    tan_vandermonde: Option<f64>,
    c_omega: Option<f64>,
    chi_mono: Option<f64>,
    chi_coef: Option<f64>,
    g_d: Option<f64>,
    bound: Option<f64>,
    bound_holds: Option<bool>,
    slackness: Option<f64>,
    cond_k: Option<f64>,
    cond_van: Option<f64>,
    routes_agree: Option<bool>,
    retries: Option<usize>,
    error: String,
}

#[derive(Serialize)]
struct SummaryRow {
    b: usize,
    d: usize,
    n: usize,
    trials: usize,
    errors: usize,
    holds: usize,
    holds_rate: f64,
    median_slackness: f64,
    chi_mono_q25: f64,
    chi_mono_median: f64,
    chi_mono_q75: f64,
    chi_coef_q25: f64,
    chi_coef_median: f64,
    chi_coef_q75: f64,
    c_omega_q25: f64,
    c_omega_median: f64,
    c_omega_q75: f64,
    routes_compared: usize,
    routes_agree: usize,
    max_retries: usize,
}

fn quartiles(mut xs: Vec<f64>) -> [f64; 3] {
    xs.sort_by(f64::total_cmp);
    [quantile(&xs, 0.25), quantile(&xs, 0.5), quantile(&xs, 0.75)]
}

pub(super) fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let trials = bound_trials(config)?;
    let mut rows = Vec::new();
    let mut long = Vec::new();
    for t in &trials {
        let stream = derive_stream_id(&t.canonical, t.trial as u64);
        match &t.report {
            Ok(r) => {
                rows.push(TrialRow {
                    b: t.b,
                    d: t.d,
                    n: t.n,
                    trial: t.trial,
                    seed: config.seed,
                    stream,
                    tan_krylov: Some(r.tan_angle_krylov),
                    tan_vandermonde: Some(r.tan_angle_vandermonde),
                    c_omega: Some(r.c_omega),
                    chi_mono: Some(r.chi_mono),
                    chi_coef: Some(r.chi_coef),
                    g_d: Some(r.g_d),
                    bound: Some(r.bound),
                    bound_holds: Some(r.bound_holds),
                    slackness: Some(r.slackness()),
                    cond_k: Some(r.cond_k),
                    cond_van: Some(r.cond_van),
                    routes_agree: route_agreement(r),
                    retries: Some(r.retries),
                    error: String::new(),
                });
                let flags = if r.cond_k >= ROUTE_COND_LIMIT {
                    "ill_conditioned"
                } else {
                    ""
                };
                let metrics = [
                    ("tan_krylov", r.tan_angle_krylov),
                    ("tan_vandermonde", r.tan_angle_vandermonde),
                    ("c_omega", r.c_omega),
                    ("chi_mono", r.chi_mono),
                    ("chi_coef", r.chi_coef),
                    ("g_d", r.g_d),
                    ("bound", r.bound),
                    ("bound_holds", f64::from(u8::from(r.bound_holds))),
                    ("cond_k", r.cond_k),
                    ("cond_van", r.cond_van),
                ];
                long.extend(metrics.into_iter().map(|(metric, value)| ResultRow {
                    experiment: Command::BoundVerify.name(),
                    config: t.canonical.clone(),
                    trial: t.trial,
                    seed: config.seed,
                    stream,
                    metric,
                    value,
                    retries: r.retries,
                    flags: flags.into(),
                }));
            }
            Err(e) => rows.push(TrialRow {
                b: t.b,
                d: t.d,
                n: t.n,
                trial: t.trial,
                seed: config.seed,
                stream,
                tan_krylov: None,
                tan_vandermonde: None,
                c_omega: None,
                chi_mono: None,
                chi_coef: None,
                g_d: None,
                bound: None,
                bound_holds: None,
                slackness: None,
                cond_k: None,
                cond_van: None,
                routes_agree: None,
                retries: None,
                error: e.clone(),
            }),
        }
    }

    let mut summary = Vec::new();
    let mut failures = Vec::new();
    let mut console = String::from("   b  d    n  trials  holds  median slack  routes agree\n");
    for &b in &config.b {
        for &d in &config.d {
            let group: Vec<&BoundTrial> = trials.iter().filter(|t| t.b == b && t.d == d).collect();
            let ok: Vec<&RobustnessReport> = group
                .iter()
                .filter_map(|t| t.report.as_ref().ok())
                .collect();
            let errors = group.len() - ok.len();
            let holds = ok.iter().filter(|r| r.bound_holds).count();
            let compared: Vec<bool> = ok.iter().filter_map(|r| route_agreement(r)).collect();
            let agree = compared.iter().filter(|a| **a).count();
            let col =
                |f: fn(&RobustnessReport) -> f64| quartiles(ok.iter().map(|r| f(r)).collect());
            let [cm1, cm2, cm3] = col(|r| r.chi_mono);
            let [cc1, cc2, cc3] = col(|r| r.chi_coef);
            let [co1, co2, co3] = col(|r| r.c_omega);
            let slack = col(RobustnessReport::slackness)[1];
            let n = group.first().map_or(config.n, |t| t.n);
            let rate = holds as f64 / group.len() as f64;
            summary.push(SummaryRow {
                b,
                d,
                n,
                trials: group.len(),
                errors,
                holds,
                holds_rate: rate,
                median_slackness: slack,
                chi_mono_q25: cm1,
                chi_mono_median: cm2,
                chi_mono_q75: cm3,
                chi_coef_q25: cc1,
                chi_coef_median: cc2,
                chi_coef_q75: cc3,
                c_omega_q25: co1,
                c_omega_median: co2,
                c_omega_q75: co3,
                routes_compared: compared.len(),
                routes_agree: agree,
                max_retries: ok.iter().map(|r| r.retries).max().unwrap_or(0),
            });
            let _ = writeln!(
                console,
                "{b:>4} {d:>2} {n:>4} {:>7} {:>6} {slack:>13.3e} {:>7}/{}",
                group.len(),
                holds,
                agree,
                compared.len()
            );
            if holds < group.len() {
                failures.push(Failure {
                    check: format!("bound_holds b={b} d={d}"),
                    detail: format!(
                        "{holds}/{} trials hold, {errors} exhausted their redraws",
                        group.len()
                    ),
                });
            }
            if agree < compared.len() {
                failures.push(Failure {
                    check: format!("routes_agree b={b} d={d}"),
                    detail: format!(
                        "{agree}/{} well-conditioned trials agree to {ROUTE_REL_TOL:e}",
                        compared.len()
                    ),
                });
            }
        }
    }
    let trials_path = out.join("bound_verify.csv");
    let summary_path = out.join("bound_verify_summary.csv");
    let results_path = out.join("results.csv");
    write_csv(&trials_path, &rows)?;
    write_csv(&summary_path, &summary)?;
    write_csv(&results_path, &long)?;
    Ok(Outcome {
        command: Command::BoundVerify,
        files: vec![trials_path, summary_path, results_path],
        failures,
        console,
    })
}
