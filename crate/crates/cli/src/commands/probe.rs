use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use rsbl_core::linalg::{derive_stream_id, gaussian_matrix, DenseMatrix, RngStream};
use rsbl_core::robustness::{
    probe_solvent_difference, sandwich_d2, RobustnessError, SandwichResult,
};
use serde::Serialize;

use super::{fmt_list, Failure, Outcome};
use crate::output::{write_csv, ResultRow};
use crate::{CliError, Command, ExperimentConfig};

/// Redraws allowed per sandwich pair when `B₁ − B₂` is numerically singular.
const SANDWICH_REDRAWS: usize = 5;

#[derive(Serialize)]
struct ProbeRow {
    b: usize,
    lambda_i: String,
    lambda_j: String,
    trials: usize,
    min: f64,
    q01: f64,
    q25: f64,
    q50: f64,
    q75: f64,
    q99: f64,
    max: f64,
}

pub(super) fn run_probe(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let s = probe_solvent_difference(
        &config.lambda_i,
        &config.lambda_j,
        config.trials,
        config.seed,
    )?;
    let row = ProbeRow {
        b: config.lambda_i.len(),
        lambda_i: fmt_list(&config.lambda_i),
        lambda_j: fmt_list(&config.lambda_j),
        trials: s.trials,
        min: s.min,
        q01: s.q01,
        q25: s.q25,
        q50: s.q50,
        q75: s.q75,
        q99: s.q99,
        max: s.max,
    };
    let console = format!(
        "smallest singular value of B_i - B_j over {} draws\n  min {:.4e}  q01 {:.4e}  q50 {:.4e}  q99 {:.4e}  max {:.4e}\n",
        s.trials, s.min, s.q01, s.q50, s.q99, s.max
    );
    let path = out.join("probe.csv");
    write_csv(&path, &[row])?;
    Ok(Outcome {
        command: Command::Probe,
        files: vec![path],
        failures: Vec::new(),
        console,
    })
}

/// One Gaussian pair `(B₁, B₂)` of size `b` and its sandwich values.
#[derive(Clone, Debug, PartialEq)]
pub struct SandwichPair {
    pub trial: usize,
    pub b: usize,
    pub canonical: String,
    pub result: SandwichResult,
    /// pairs redrawn because `B₁ − B₂` was numerically singular
    pub retries: usize,
}

/// `trials` pairs with sizes cycling through `config.b`. Pair `t` draws from
/// stream `derive_stream_id("sandwich;b=<b>", t)`.
pub fn sandwich_pairs(config: &ExperimentConfig) -> Result<Vec<SandwichPair>, CliError> {
    (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let b = config.b[trial % config.b.len()];
            let canonical = format!("sandwich;b={b}");
            let mut rng = RngStream::new(config.seed, derive_stream_id(&canonical, trial as u64));
            let mut retries = 0;
            loop {
                let b1 = gaussian_matrix(b, b, &mut rng);
                let b2 = gaussian_matrix(b, b, &mut rng);
                match sandwich_d2(&b1, &b2) {
                    Ok(result) => {
                        return Ok(SandwichPair {
                            trial,
                            b,
                            canonical,
                            result,
                            retries,
                        })
                    }
                    Err(RobustnessError::SingularDifference { .. })
                        if retries < SANDWICH_REDRAWS =>
                    {
                        retries += 1
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        })
        .collect()
}

#[derive(Serialize)]
struct SandwichRow {
    case: &'static str,
    trial: usize,
    b: usize,
    lower: f64,
    middle: f64,
    upper: f64,
    holds: bool,
    retries: usize,
}

#[derive(Serialize)]
struct SandwichSummary {
    pairs: usize,
    holds: usize,
    holds_rate: f64,
    anchor_middle: f64,
    anchor_holds: bool,
    min_lower_ratio: f64,
    max_upper_ratio: f64,
}

pub(super) fn run_sandwich(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    let b = config.b[0];
    let anchor = sandwich_d2(
        &DenseMatrix::identity(b),
        &DenseMatrix::identity(b).scale(-1.0),
    )?;
    let pairs = sandwich_pairs(config)?;
    let mut rows = vec![SandwichRow {
        case: "anchor",
        trial: 0,
        b,
        lower: anchor.lower,
        middle: anchor.middle,
        upper: anchor.upper,
        holds: anchor.holds,
        retries: 0,
    }];
    rows.extend(pairs.iter().map(|p| SandwichRow {
        case: "random",
        trial: p.trial,
        b: p.b,
        lower: p.result.lower,
        middle: p.result.middle,
        upper: p.result.upper,
        holds: p.result.holds,
        retries: p.retries,
    }));
    let long: Vec<ResultRow> = pairs
        .iter()
        .flat_map(|p| {
            [
                ("lower", p.result.lower),
                ("middle", p.result.middle),
                ("upper", p.result.upper),
            ]
            .map(|(metric, value)| ResultRow {
                experiment: Command::Sandwich.name(),
                config: p.canonical.clone(),
                trial: p.trial,
                seed: config.seed,
                stream: derive_stream_id(&p.canonical, p.trial as u64),
                metric,
                value,
                retries: p.retries,
                flags: if p.result.holds {
                    String::new()
                } else {
                    "violated".into()
                },
            })
        })
        .collect();
    let holds = pairs.iter().filter(|p| p.result.holds).count();
    let anchor_ok = anchor.holds && (anchor.middle - 0.5).abs() <= 1e-12;
    let summary = SandwichSummary {
        pairs: pairs.len(),
        holds,
        holds_rate: holds as f64 / pairs.len() as f64,
        anchor_middle: anchor.middle,
        anchor_holds: anchor_ok,
        min_lower_ratio: pairs
            .iter()
            .map(|p| p.result.middle / p.result.lower)
            .fold(f64::INFINITY, f64::min),
        max_upper_ratio: pairs
            .iter()
            .map(|p| p.result.middle / p.result.upper)
            .fold(0.0, f64::max),
    };
    let mut failures = Vec::new();
    if holds < pairs.len() {
        failures.push(Failure {
            check: "sandwich_holds".into(),
            detail: format!(
                "{holds}/{} random pairs satisfy both inequalities",
                pairs.len()
            ),
        });
    }
    if !anchor_ok {
        failures.push(Failure {
            check: "sandwich_anchor".into(),
            detail: format!(
                "B1 = I, B2 = -I gives middle {} (expected 0.5)",
                anchor.middle
            ),
        });
    }
    let mut console = String::new();
    let _ = writeln!(
        console,
        "sandwich: {holds}/{} random pairs hold; anchor middle {}",
        pairs.len(),
        anchor.middle
    );
    let _ = writeln!(
        console,
        "  tightest lower ratio {:.4}, tightest upper ratio {:.4}",
        summary.min_lower_ratio, summary.max_upper_ratio
    );
    let rows_path = out.join("sandwich.csv");
    let summary_path = out.join("sandwich_summary.csv");
    let results_path = out.join("results.csv");
    write_csv(&rows_path, &rows)?;
    write_csv(&summary_path, &[summary])?;
    write_csv(&results_path, &long)?;
    Ok(Outcome {
        command: Command::Sandwich,
        files: vec![rows_path, summary_path, results_path],
        failures,
        console,
    })
}
