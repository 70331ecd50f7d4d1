use std::fmt::Write as _;
use std::path::Path;

use rsbl_core::linalg::derive_stream_id;
use rsbl_core::robustness::{
    conjecture_experiment, fit_loglog_slope, ConjecturePoint, ExperimentFamily, PerpVariant,
    SlopeFit, Sweep,
};
use serde::Serialize;

use super::Outcome;
use crate::output::{cluster_plot_script, write_csv, write_text, ResultRow};
use crate::{CliError, Command, ConfigError, ExperimentConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub variant: PerpVariant,
    pub sweep: Sweep,
    pub points: Vec<ConjecturePoint>,
}

/// Fitted log-log slope of the medians for one `d`, with the expected value
/// (`0` for the β-sweep, `1 − d` for the α-sweep) and the mode's tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeCheck {
    pub variant: PerpVariant,
    pub sweep: Sweep,
    pub d: usize,
    pub fit: Option<SlopeFit>,
    pub expected: f64,
    pub tolerance: f64,
}

impl SlopeCheck {
    pub fn within_tolerance(&self) -> bool {
        self.fit
            .is_some_and(|f| (f.slope - self.expected).abs() <= self.tolerance)
    }
}

fn families(config: &ExperimentConfig) -> Result<Vec<ExperimentFamily>, CliError> {
    if !config.free && (config.bd != 60 || config.n != 1000) {
        return Err(ConfigError::Invalid(format!(
            "the preset runs at n = 1000, bd = 60 (got n = {}, bd = {}); set free = true for other sizes",
            config.n, config.bd
        ))
        .into());
    }
    let mut out = Vec::new();
    for variant in config.variant.variants() {
        for sweep in [Sweep::Beta, Sweep::Alpha] {
            let (ds, exponents, fixed) = match sweep {
                Sweep::Beta => (
                    &config.beta_sweep_d,
                    &config.beta_exponents,
                    config.beta_sweep_alpha,
                ),
                Sweep::Alpha => (
                    &config.alpha_sweep_d,
                    &config.alpha_exponents,
                    config.alpha_sweep_beta,
                ),
            };
            out.push(ExperimentFamily {
                sweep,
                variant,
                n: config.n,
                bd: config.bd,
                ds: ds.clone(),
                exponents: exponents.clone(),
                fixed,
            });
        }
    }
    Ok(out)
}

/// Both sweeps for every selected variant, in (variant, sweep) order.
pub fn cluster_sweeps(config: &ExperimentConfig) -> Result<Vec<SweepResult>, CliError> {
    families(config)?
        .into_iter()
        .map(|f| {
            let points = conjecture_experiment(&f, config.trials, config.seed)?;
            Ok(SweepResult {
                variant: f.variant,
                sweep: f.sweep,
                points,
            })
        })
        .collect()
}

/// One slope per (variant, sweep, d) through `(abscissa, median)`.
pub fn slope_fits(results: &[SweepResult], config: &ExperimentConfig) -> Vec<SlopeCheck> {
    let mode = config.mode();
    let mut out = Vec::new();
    for r in results {
        let mut ds: Vec<usize> = r.points.iter().map(|p| p.d).collect();
        ds.dedup();
        for d in ds {
            let pts: Vec<(f64, f64)> = r
                .points
                .iter()
                .filter(|p| p.d == d)
                .map(|p| (p.abscissa, p.summary.median))
                .collect();
            let (expected, tolerance) = match r.sweep {
                Sweep::Beta => (0.0, mode.beta_slope_tolerance()),
                Sweep::Alpha => (1.0 - d as f64, mode.alpha_slope_tolerance()),
            };
            out.push(SlopeCheck {
                variant: r.variant,
                sweep: r.sweep,
                d,
                fit: fit_loglog_slope(&pts),
                expected,
                tolerance,
            });
        }
    }
    out
}

#[derive(Serialize)]
struct PointRow {
    variant: &'static str,
    sweep: &'static str,
    n: usize,
    b: usize,
    d: usize,
    exponent: u32,
    alpha: f64,
    beta: f64,
    relgap: f64,
    abscissa: f64,
    trials: usize,
    infinite: usize,
    q25: f64,
    median: f64,
    q75: f64,
}

#[derive(Serialize)]
struct PlotRow {
    d: usize,
    abscissa: f64,
    median: f64,
    q25: f64,
    q75: f64,
}

#[derive(Serialize)]
struct SlopeRow {
    variant: &'static str,
    sweep: &'static str,
    d: usize,
    slope: Option<f64>,
    intercept: Option<f64>,
    r2: Option<f64>,
}

#[derive(Serialize)]
struct SlopeCheckRow {
    variant: &'static str,
    sweep: &'static str,
    d: usize,
    slope: Option<f64>,
    points_used: usize,
    expected: f64,
    tolerance: f64,
    within_tolerance: bool,
}

pub(super) fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let results = cluster_sweeps(config)?;
    let slopes = slope_fits(&results, config);
    let mut files = Vec::new();
    let mut plots = Vec::new();
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for r in &results {
        let (variant, sweep) = (r.variant.name(), r.sweep.name());
        let plot: Vec<PlotRow> = r
            .points
            .iter()
            .map(|p| PlotRow {
                d: p.d,
                abscissa: p.abscissa,
                median: p.summary.median,
                q25: p.summary.q25,
                q75: p.summary.q75,
            })
            .collect();
        let name = format!("cluster_{variant}_{sweep}.csv");
        let path = out.join(&name);
        write_csv(&path, &plot)?;
        files.push(path);
        plots.push((name, variant.to_string(), sweep.to_string()));
        for p in &r.points {
            points.push(PointRow {
                variant,
                sweep,
                n: config.n,
                b: p.b,
                d: p.d,
                exponent: p.exponent,
                alpha: p.alpha,
                beta: p.beta,
                relgap: p.relgap,
                abscissa: p.abscissa,
                trials: p.summary.count,
                infinite: p.summary.infinite,
                q25: p.summary.q25,
                median: p.summary.median,
                q75: p.summary.q75,
            });
            rows.extend(p.samples.iter().enumerate().map(|(t, &v)| ResultRow {
                experiment: Command::ClusterRobustness.name(),
                config: p.canonical.clone(),
                trial: t,
                seed: config.seed,
                stream: derive_stream_id(&p.canonical, t as u64),
                metric: "tan_angle",
                value: v,
                retries: 0,
                flags: if v.is_finite() {
                    String::new()
                } else {
                    "infinite".into()
                },
            }));
        }
    }
    let slope_rows: Vec<SlopeRow> = slopes
        .iter()
        .map(|s| SlopeRow {
            variant: s.variant.name(),
            sweep: s.sweep.name(),
            d: s.d,
            slope: s.fit.map(|f| f.slope),
            intercept: s.fit.map(|f| f.intercept),
            r2: s.fit.map(|f| f.r2),
        })
        .collect();
    let check_rows: Vec<SlopeCheckRow> = slopes
        .iter()
        .map(|s| SlopeCheckRow {
            variant: s.variant.name(),
            sweep: s.sweep.name(),
            d: s.d,
            slope: s.fit.map(|f| f.slope),
            points_used: s.fit.map_or(0, |f| f.used),
            expected: s.expected,
            tolerance: s.tolerance,
            within_tolerance: s.within_tolerance(),
        })
        .collect();
    let points_path = out.join("cluster_robustness.csv");
    write_csv(&points_path, &points)?;
    files.push(points_path);
    let slope_path = out.join("slopes.csv");
    write_csv(&slope_path, &slope_rows)?;
    let check_path = out.join("slope_checks.csv");
    write_csv(&check_path, &check_rows)?;
    let results_path = out.join("results.csv");
    write_csv(&results_path, &rows)?;
    let script = out.join("plot_cluster.py");
    write_text(&script, &cluster_plot_script(&plots))?;
    files.extend([slope_path, check_path, results_path, script]);

    let mut console = format!(
        "{} trials per configuration ({:?} mode)\n",
        config.trials,
        config.mode()
    );
    for s in &slopes {
        let slope = s.fit.map_or("n/a".to_string(), |f| {
            format!("{:+.3} (r2 {:.3}, {} pts)", f.slope, f.r2, f.used)
        });
        let _ = writeln!(
            console,
            "{:<9} {:<5} d={}  slope {slope}  expected {:+} +/- {}  {}",
            s.variant.name(),
            s.sweep.name(),
            s.d,
            s.expected,
            s.tolerance,
            if s.within_tolerance() {
                "ok"
            } else {
                "OUTSIDE"
            }
        );
    }
    Ok(Outcome {
        command: Command::ClusterRobustness,
        files,
        failures: Vec::new(),
        console,
    })
}
