use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rsbl_core::lanczos::{
    table1_matvecs, LanczosError, TABLE1_BETAS, TABLE1_BLOCK_SIZES, TABLE1_N, TABLE1_REFERENCE,
};
use rsbl_core::linalg::derive_stream_id;
use serde::Serialize;

use super::Outcome;
use crate::output::{write_csv, ResultRow};
use crate::{CliError, Command, ConfigError, ExperimentConfig};

/// Matvec counts of one (β, b) cell, one entry per seed; `None` marks a run
/// that did not converge within `n` matvecs.
#[derive(Clone, Debug, PartialEq)]
pub struct Table1Cell {
    pub beta: f64,
    pub b: usize,
    pub canonical: String,
    pub streams: Vec<u64>,
    pub counts: Vec<Option<usize>>,
}

impl Table1Cell {
    /// Median over seeds, `None` if any seed failed to converge.
    pub fn median(&self) -> Option<f64> {
        let mut c: Vec<usize> = self.counts.iter().copied().collect::<Option<_>>()?;
        c.sort_unstable();
        let k = c.len();
        if k == 0 {
            return None;
        }
        Some(if k % 2 == 1 {
            c[k / 2] as f64
        } else {
            (c[k / 2 - 1] + c[k / 2]) as f64 / 2.0
        })
    }

    pub fn reference(&self) -> Option<usize> {
        let row = TABLE1_BETAS.iter().position(|&x| x == self.beta)?;
        let col = TABLE1_BLOCK_SIZES.iter().position(|&x| x == self.b)?;
        Some(TABLE1_REFERENCE[row][col])
    }
}

/// All cells in row-major (β, b) order, trials fanned out in parallel.
pub fn table1_cells(config: &ExperimentConfig) -> Result<Vec<Table1Cell>, CliError> {
    if config.n != TABLE1_N {
        return Err(ConfigError::Invalid(format!(
            "table1 runs at n = {TABLE1_N}, got n = {}",
            config.n
        ))
        .into());
    }
    if let Some(b) = config.b.iter().find(|&&b| b > TABLE1_N) {
        return Err(ConfigError::Invalid(format!("block size {b} exceeds n")).into());
    }
    let mut cells: Vec<Table1Cell> = Vec::new();
    for &beta in &config.beta {
        for &b in &config.b {
            let canonical = format!("table1;n={TABLE1_N};beta={beta:?};b={b}");
            let streams = (0..config.trials as u64)
                .map(|t| derive_stream_id(&canonical, t))
                .collect();
            cells.push(Table1Cell {
                beta,
                b,
                canonical,
                streams,
                counts: Vec::new(),
            });
        }
    }
    let jobs: Vec<(usize, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.streams.iter().map(move |&s| (i, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(
            |&(i, stream)| match table1_matvecs(cells[i].beta, cells[i].b, config.seed, stream) {
                Ok(m) => Ok(Some(m)),
                Err(LanczosError::NoConvergence { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    for (&(i, _), r) in jobs.iter().zip(results) {
        cells[i].counts.push(r);
    }
    Ok(cells)
}

#[derive(Serialize)]
struct SummaryRow {
    beta: f64,
    b: usize,
    seeds: usize,
    converged: usize,
    median: Option<f64>,
    overhead_pct: Option<f64>,
    reference: Option<usize>,
    within_b: Option<bool>,
}

pub(super) fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let cells = table1_cells(config)?;
    let base = |beta: f64| {
        cells
            .iter()
            .find(|c| c.beta == beta && c.b == 1)
            .and_then(Table1Cell::median)
    };
    let overhead = |c: &Table1Cell| Some((c.median()? / base(c.beta)? - 1.0) * 100.0);

    let summary: Vec<SummaryRow> = cells
        .iter()
        .map(|c| SummaryRow {
            beta: c.beta,
            b: c.b,
            seeds: c.counts.len(),
            converged: c.counts.iter().flatten().count(),
            median: c.median(),
            overhead_pct: overhead(c),
            reference: c.reference(),
            within_b: c
                .median()
                .zip(c.reference())
                .map(|(m, r)| (m - r as f64).abs() <= c.b as f64),
        })
        .collect();
    let rows: Vec<ResultRow> = cells
        .iter()
        .flat_map(|c| {
            c.counts
                .iter()
                .zip(&c.streams)
                .enumerate()
                .map(|(t, (m, &stream))| ResultRow {
                    experiment: Command::Table1.name(),
                    config: c.canonical.clone(),
                    trial: t,
                    seed: config.seed,
                    stream,
                    metric: "matvecs",
                    value: m.map_or(f64::NAN, |m| m as f64),
                    retries: 0,
                    flags: if m.is_some() {
                        String::new()
                    } else {
                        "no_convergence".into()
                    },
                })
        })
        .collect();
    let table = out.join("table1.csv");
    let results = out.join("results.csv");
    write_csv(&table, &summary)?;
    write_csv(&results, &rows)?;

    let mut console = String::from("median matvecs (overhead vs b=1); NC = no convergence\n");
    let _ = write!(console, "{:>8}", "beta");
    for b in &config.b {
        let _ = write!(console, " {:>12}", format!("b={b}"));
    }
    console.push('\n');
    for &beta in &config.beta {
        let _ = write!(console, "{:>8}", format!("{beta:?}"));
        for c in cells.iter().filter(|c| c.beta == beta) {
            let text = match (c.median(), overhead(c)) {
                (None, _) => "NC".to_string(),
                (Some(m), Some(p)) if c.b != 1 => format!("{m} ({p:.0}%)"),
                (Some(m), _) => format!("{m}"),
            };
            let _ = write!(console, " {text:>12}");
        }
        console.push('\n');
    }
    Ok(Outcome {
        command: Command::Table1,
        files: vec![table, results],
        failures: Vec::new(),
        console,
    })
}
