use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use rsbl_cli::{resolve_out_dir, run, Command, ExperimentConfig, Mode};

/// Randomized small-block Lanczos experiments.
#[derive(Debug, Parser)]
#[command(name = "rsbl", version)]
struct Cli {
    /// table1, cluster-robustness, bound-verify, probe, sandwich or lowrank
    command: Command,
    /// flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// master seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// output directory (default: config `out`, then $RSBL_OUT, then ./rsbl-out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// 200 trials for the cluster experiments (default)
    #[arg(long, conflicts_with = "full")]
    quick: bool,
    /// 1000 trials for the cluster experiments
    #[arg(long)]
    full: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            let summary = serde_json::json!({
                "command": cli.command.name(),
                "error": format!("{e:#}"),
            });
            eprintln!("{summary}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<ExitCode> {
    let mode = match (cli.quick, cli.full) {
        (_, true) => Some(Mode::Full),
        (true, _) => Some(Mode::Quick),
        _ => None,
    };
    let text = match &cli.config {
        Some(path) => {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
        }
        None => String::new(),
    };
    let mut config = ExperimentConfig::parse(&text, cli.command, mode)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    let out = resolve_out_dir(
        cli.out.as_deref(),
        config.out.as_deref(),
        std::env::var_os(rsbl_cli::output::OUT_ENV),
    );
    config.validate()?;

    let outcome = run(&config, &out)?;
    print!("{}", outcome.console);
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if outcome.passed() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{}", outcome.failure_json());
        Ok(ExitCode::FAILURE)
    }
}
