use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::output::{ensure_dir, write_text};
use crate::{CliError, Command, ExperimentConfig};

mod bound;
mod cluster;
mod lowrank;
mod probe;
mod table1;

pub use bound::{bound_trials, route_agreement, BoundTrial};
pub use cluster::{cluster_sweeps, slope_fits, SlopeCheck, SweepResult};
pub use lowrank::lowrank_reports;
pub use probe::{sandwich_pairs, SandwichPair};
pub use table1::{table1_cells, Table1Cell};

/// A hard assertion that did not hold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub files: Vec<PathBuf>,
    pub failures: Vec<Failure>,
    /// human-readable summary for standard output
    pub console: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// `{"command": …, "failures": [{"check": …, "detail": …}, …]}`
    pub fn failure_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            command: &'static str,
            failures: &'a [Failure],
        }
        serde_json::to_string(&Summary {
            command: self.command.name(),
            failures: &self.failures,
        })
        .expect("plain structs serialize")
    }
}

/// Runs the command named by `config.experiment` and writes its files under
/// `out`, including a `config.txt` echo of the resolved configuration.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<Outcome, CliError> {
    config.validate()?;
    ensure_dir(out)?;
    let echo = out.join("config.txt");
    write_text(&echo, &config.to_text())?;
    let mut outcome = match config.experiment {
        Command::Table1 => table1::run(config, out)?,
        Command::ClusterRobustness => cluster::run(config, out)?,
        Command::BoundVerify => bound::run(config, out)?,
        Command::Probe => probe::run_probe(config, out)?,
        Command::Sandwich => probe::run_sandwich(config, out)?,
        Command::Lowrank => lowrank::run(config, out)?,
    };
    outcome.files.insert(0, echo);
    Ok(outcome)
}

fn fmt_list<T: std::fmt::Debug>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(" ")
}
