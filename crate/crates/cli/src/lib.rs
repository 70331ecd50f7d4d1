//! Experiment harness around `rsbl-core`: configuration files, the six
//! experiment commands, and their CSV and plot-data output.
//!
//! Every command is a pure function of its [`ExperimentConfig`]; per-trial
//! random streams come from `derive_stream_id(canonical, trial)` under the
//! config's master seed, so reruns write identical bytes.

use std::path::{Path, PathBuf};

use rsbl_core::lanczos::LanczosError;
use rsbl_core::robustness::RobustnessError;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, Failure, Outcome};
pub use config::{Command, ConfigError, ExperimentConfig, Mode, VariantSelect};
pub use output::{resolve_out_dir, ResultRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
    #[error(transparent)]
    Lanczos(#[from] LanczosError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }
}
