use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rsbl_core::linalg::{derive_stream_id, RngStream};
use rsbl_core::robustness::{lowrank_check, lowrank_example, LowRankReport};
use serde::Serialize;

use super::{fmt_list, Outcome};
use crate::output::write_csv;
use crate::{CliError, Command, ConfigError, ExperimentConfig};

/// Reports for every (b, d) and trial, in that order. Trial `t` draws the
/// rotation (when enabled) and then the Lanczos start from stream
/// `derive_stream_id(canonical, t)`.
pub fn lowrank_reports(
    config: &ExperimentConfig,
) -> Result<Vec<(usize, usize, usize, LowRankReport)>, CliError> {
    let mut jobs = Vec::new();
    for &b in &config.b {
        for &d in &config.d {
            if b * config.ell > config.n || d > config.ell {
                return Err(ConfigError::Invalid(format!(
                    "need d <= ell and b*ell <= n, got b={b} d={d} ell={} n={}",
                    config.ell, config.n
                ))
                .into());
            }
            jobs.extend((0..config.trials).map(move |t| (b, d, t)));
        }
    }
    jobs.into_par_iter()
        .map(|(b, d, t)| {
            let canonical = format!(
                "lowrank;rows={};n={};singular={};rotate={};b={b};d={d};ell={}",
                config.rows,
                config.n,
                fmt_list(&config.singular),
                config.rotate,
                config.ell
            );
            let mut rng = RngStream::new(config.seed, derive_stream_id(&canonical, t as u64));
            let a = lowrank_example(
                config.rows,
                config.n,
                &config.singular,
                config.rotate.then_some(&mut rng),
            )?;
            let r = lowrank_check(&a, b, d, config.ell, config.epsilon, &mut rng)?;
            Ok((b, d, t, r))
        })
        .collect()
}

#[derive(Serialize)]
struct Row {
    b: usize,
    d: usize,
    ell: usize,
    trial: usize,
    epsilon: f64,
    rank: usize,
    spectral_error: f64,
    best_spectral: f64,
    spectral_ratio: f64,
    frobenius_error: f64,
    best_frobenius: f64,
    frobenius_ratio: f64,
    spectral_holds: bool,
    frobenius_holds: bool,
    max_eigen_deviation: f64,
    eigen_bound: f64,
    eigen_holds: bool,
}

pub(super) fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let reports = lowrank_reports(config)?;
    let rows: Vec<Row> = reports
        .iter()
        .map(|(b, d, t, r)| Row {
            b: *b,
            d: *d,
            ell: config.ell,
            trial: *t,
            epsilon: r.epsilon,
            rank: r.rank,
            spectral_error: r.spectral_error,
            best_spectral: r.best_spectral,
            spectral_ratio: r.spectral_ratio,
            frobenius_error: r.frobenius_error,
            best_frobenius: r.best_frobenius,
            frobenius_ratio: r.frobenius_ratio,
            spectral_holds: r.spectral_holds,
            frobenius_holds: r.frobenius_holds,
            max_eigen_deviation: r.eigen_deviation.iter().copied().fold(0.0, f64::max),
            eigen_bound: r.eigen_bound,
            eigen_holds: r.eigen_holds,
        })
        .collect();
    let mut console = format!(
        "low-rank approximation, observational (epsilon = {})\n",
        config.epsilon
    );
    for &b in &config.b {
        for &d in &config.d {
            let group: Vec<&LowRankReport> = reports
                .iter()
                .filter(|(rb, rd, _, _)| *rb == b && *rd == d)
                .map(|x| &x.3)
                .collect();
            let worst = group.iter().map(|r| r.spectral_ratio).fold(0.0, f64::max);
            let within = group.iter().filter(|r| r.spectral_holds).count();
            let _ = writeln!(
                console,
                "  b={b} d={d} ell={}: worst spectral ratio {worst:.6}, {within}/{} within 1+epsilon",
                config.ell,
                group.len()
            );
        }
    }
    let path = out.join("lowrank.csv");
    write_csv(&path, &rows)?;
    Ok(Outcome {
        command: Command::Lowrank,
        files: vec![path],
        failures: Vec::new(),
        console,
    })
}
