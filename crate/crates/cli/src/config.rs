//! Flat `key = value` experiment configuration.
//!
//! Lines whose first non-blank character is `#` are comments. Lists are
//! comma separated. Unknown keys are rejected. Every key has a default that
//! depends on the command and on the quick/full mode, so a config file only
//! needs the keys it changes.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rsbl_core::robustness::PerpVariant;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {value:?} ({reason})")]
    Value {
        key: String,
        value: String,
        reason: String,
    },
    #[error("config is for `{found}` but the command is `{expected}`")]
    WrongExperiment { expected: String, found: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Command {
    Table1,
    ClusterRobustness,
    BoundVerify,
    Probe,
    Sandwich,
    Lowrank,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::Table1,
        Self::ClusterRobustness,
        Self::BoundVerify,
        Self::Probe,
        Self::Sandwich,
        Self::Lowrank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::ClusterRobustness => "cluster-robustness",
            Self::BoundVerify => "bound-verify",
            Self::Probe => "probe",
            Self::Sandwich => "sandwich",
            Self::Lowrank => "lowrank",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|c| c.name()).collect();
                format!(
                    "unknown command '{s}' (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Quick mode is the default; full mode uses 1000 trials for the cluster
/// experiments and the tighter slope tolerances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Quick,
    Full,
}

impl Mode {
    pub fn cluster_trials(self) -> usize {
        match self {
            Self::Quick => 200,
            Self::Full => 1000,
        }
    }

    /// Allowed deviation of the β-sweep slope from 0.
    pub fn beta_slope_tolerance(self) -> f64 {
        match self {
            Self::Quick => 0.15,
            Self::Full => 0.1,
        }
    }

    /// Allowed deviation of the α-sweep slope from `1 − d`.
    pub fn alpha_slope_tolerance(self) -> f64 {
        match self {
            Self::Quick => 0.35,
            Self::Full => 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantSelect {
    Exterior,
    Interior,
    Both,
}

impl VariantSelect {
    pub fn variants(self) -> Vec<PerpVariant> {
        match self {
            Self::Exterior => vec![PerpVariant::Exterior],
            Self::Interior => vec![PerpVariant::Interior],
            Self::Both => vec![PerpVariant::Exterior, PerpVariant::Interior],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Exterior => "exterior",
            Self::Interior => "interior",
            Self::Both => "both",
        }
    }
}

impl FromStr for VariantSelect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exterior" => Ok(Self::Exterior),
            "interior" => Ok(Self::Interior),
            "both" => Ok(Self::Both),
            other => Err(format!(
                "expected exterior, interior or both, got '{other}'"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Command,
    pub n: usize,
    pub b: Vec<usize>,
    pub d: Vec<usize>,
    /// table1 β values
    pub beta: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<String>,
    pub grid: usize,
    pub variant: VariantSelect,
    /// long-run flag
    pub full: bool,
    /// cluster-robustness: `b·d`, fixed at 60 unless `free` is set
    pub bd: usize,
    pub free: bool,
    pub beta_exponents: Vec<u32>,
    pub beta_sweep_d: Vec<usize>,
    /// α held fixed during the β-sweep
    pub beta_sweep_alpha: f64,
    pub alpha_exponents: Vec<u32>,
    pub alpha_sweep_d: Vec<usize>,
    /// β held fixed during the α-sweep
    pub alpha_sweep_beta: f64,
    pub lambda_i: Vec<f64>,
    pub lambda_j: Vec<f64>,
    /// lowrank: rows of `Â`
    pub rows: usize,
    pub singular: Vec<f64>,
    pub rotate: bool,
    pub ell: usize,
    pub epsilon: f64,
}

const KEYS: [&str; 26] = [
    "experiment",
    "n",
    "b",
    "d",
    "beta",
    "trials",
    "seed",
    "out",
    "grid",
    "variant",
    "full",
    "bd",
    "free",
    "beta_exponents",
    "beta_sweep_d",
    "beta_sweep_alpha",
    "alpha_exponents",
    "alpha_sweep_d",
    "alpha_sweep_beta",
    "lambda_i",
    "lambda_j",
    "rows",
    "singular",
    "rotate",
    "ell",
    "epsilon",
];

impl ExperimentConfig {
    pub fn defaults(experiment: Command, mode: Mode) -> Self {
        let mut c = Self {
            experiment,
            n: 60,
            b: vec![1, 2, 3],
            d: vec![2, 3],
            beta: vec![1.0, 0.1, 0.01, 0.001],
            trials: 100,
            seed: 0,
            out: None,
            grid: 1000,
            variant: VariantSelect::Both,
            full: mode == Mode::Full,
            bd: 60,
            free: false,
            beta_exponents: (1..=12).collect(),
            beta_sweep_d: vec![2, 3, 4, 5],
            beta_sweep_alpha: 1.0,
            alpha_exponents: (1..=10).collect(),
            alpha_sweep_d: vec![2, 3, 4],
            alpha_sweep_beta: 1e-4,
            lambda_i: vec![0.0, 0.5],
            lambda_j: vec![1.0, 1.5],
            rows: 20,
            singular: (1..=10).rev().map(f64::from).collect(),
            rotate: true,
            ell: 6,
            epsilon: 0.1,
        };
        match experiment {
            Command::Table1 => {
                c.n = 2000;
                c.b = vec![1, 2, 4, 8, 16, 32];
                c.trials = 5;
            }
            Command::ClusterRobustness => {
                c.n = 1000;
                c.trials = mode.cluster_trials();
            }
            Command::BoundVerify => {}
            Command::Probe => c.trials = 1000,
            Command::Sandwich => {
                c.b = vec![1, 2, 3, 4];
                c.trials = 1000;
            }
            Command::Lowrank => {
                c.n = 16;
                c.b = vec![2];
                c.d = vec![2];
                c.trials = 20;
            }
        }
        c
    }

    pub fn mode(&self) -> Mode {
        if self.full {
            Mode::Full
        } else {
            Mode::Quick
        }
    }

    /// Parses config text for `experiment`. A `full = true` line switches the
    /// defaults to full mode unless `mode` overrides it.
    pub fn parse(text: &str, experiment: Command, mode: Option<Mode>) -> Result<Self, ConfigError> {
        let pairs = parse_pairs(text)?;
        if let Some(found) = pairs.get("experiment") {
            if found != experiment.name() {
                return Err(ConfigError::WrongExperiment {
                    expected: experiment.name().into(),
                    found: found.clone(),
                });
            }
        }
        let mode = match (mode, pairs.get("full")) {
            (Some(m), _) => m,
            (None, Some(v)) => {
                if parse_value::<bool>("full", v)? {
                    Mode::Full
                } else {
                    Mode::Quick
                }
            }
            (None, None) => Mode::Quick,
        };
        let mut c = Self::defaults(experiment, mode);
        for (key, value) in &pairs {
            c.set(key, value)?;
        }
        c.full = mode == Mode::Full;
        if c.experiment == Command::ClusterRobustness && !pairs.contains_key("trials") {
            c.trials = mode.cluster_trials();
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => {}
            "n" => self.n = parse_value(key, v)?,
            "b" => self.b = parse_list(key, v)?,
            "d" => self.d = parse_list(key, v)?,
            "beta" => self.beta = parse_list(key, v)?,
            "trials" => self.trials = parse_value(key, v)?,
            "seed" => self.seed = parse_value(key, v)?,
            "out" => self.out = (!v.is_empty()).then(|| v.to_string()),
            "grid" => self.grid = parse_value(key, v)?,
            "variant" => self.variant = parse_value(key, v)?,
            "full" => self.full = parse_value(key, v)?,
            "bd" => self.bd = parse_value(key, v)?,
            "free" => self.free = parse_value(key, v)?,
            "beta_exponents" => self.beta_exponents = parse_list(key, v)?,
            "beta_sweep_d" => self.beta_sweep_d = parse_list(key, v)?,
            "beta_sweep_alpha" => self.beta_sweep_alpha = parse_value(key, v)?,
            "alpha_exponents" => self.alpha_exponents = parse_list(key, v)?,
            "alpha_sweep_d" => self.alpha_sweep_d = parse_list(key, v)?,
            "alpha_sweep_beta" => self.alpha_sweep_beta = parse_value(key, v)?,
            "lambda_i" => self.lambda_i = parse_list(key, v)?,
            "lambda_j" => self.lambda_j = parse_list(key, v)?,
            "rows" => self.rows = parse_value(key, v)?,
            "singular" => self.singular = parse_list(key, v)?,
            "rotate" => self.rotate = parse_value(key, v)?,
            "ell" => self.ell = parse_value(key, v)?,
            "epsilon" => self.epsilon = parse_value(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        let counts = [
            ("n", self.n),
            ("trials", self.trials),
            ("grid", self.grid),
            ("bd", self.bd),
        ];
        if let Some((k, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{k} must be positive"));
        }
        for (k, list) in [
            ("b", &self.b),
            ("d", &self.d),
            ("beta_sweep_d", &self.beta_sweep_d),
            ("alpha_sweep_d", &self.alpha_sweep_d),
        ] {
            if list.is_empty() || list.contains(&0) {
                return bad(format!("{k} must be a nonempty list of positive counts"));
            }
        }
        if self.beta_exponents.is_empty() || self.alpha_exponents.is_empty() {
            return bad("sweep exponent lists must be nonempty".into());
        }
        for (k, list) in [
            ("beta", &self.beta),
            ("lambda_i", &self.lambda_i),
            ("lambda_j", &self.lambda_j),
        ] {
            if list.is_empty() || list.iter().any(|x| !x.is_finite()) {
                return bad(format!("{k} must be a nonempty list of finite numbers"));
            }
        }
        if self.beta.iter().any(|x| *x <= 0.0) {
            return bad("beta values must be positive".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive".into());
        }
        if !(self.beta_sweep_alpha > 0.0 && self.alpha_sweep_beta > 0.0)
            || !self.beta_sweep_alpha.is_finite()
            || !self.alpha_sweep_beta.is_finite()
        {
            return bad("fixed sweep parameters must be positive".into());
        }
        if self.singular.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return bad("singular values must be finite and nonnegative".into());
        }
        if self.rows == 0 || self.ell == 0 {
            return bad("rows and ell must be positive".into());
        }
        if let Some(out) = &self.out {
            if out.trim() != out || out.contains('\n') {
                return bad("out must not have surrounding whitespace".into());
            }
        }
        Ok(())
    }

    /// Text form accepted by [`ExperimentConfig::parse`], one line per key.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# rsbl experiment configuration\n");
        let mut line = |k: &str, v: String| writeln!(s, "{k} = {v}").expect("writing to a String");
        line("experiment", self.experiment.name().into());
        line("n", self.n.to_string());
        line("b", join(&self.b));
        line("d", join(&self.d));
        line("beta", join_f64(&self.beta));
        line("trials", self.trials.to_string());
        line("seed", self.seed.to_string());
        line("out", self.out.clone().unwrap_or_default());
        line("grid", self.grid.to_string());
        line("variant", self.variant.name().into());
        line("full", self.full.to_string());
        line("bd", self.bd.to_string());
        line("free", self.free.to_string());
        line("beta_exponents", join(&self.beta_exponents));
        line("beta_sweep_d", join(&self.beta_sweep_d));
        line("beta_sweep_alpha", format!("{:?}", self.beta_sweep_alpha));
        line("alpha_exponents", join(&self.alpha_exponents));
        line("alpha_sweep_d", join(&self.alpha_sweep_d));
        line("alpha_sweep_beta", format!("{:?}", self.alpha_sweep_beta));
        line("lambda_i", join_f64(&self.lambda_i));
        line("lambda_j", join_f64(&self.lambda_j));
        line("rows", self.rows.to_string());
        line("singular", join_f64(&self.singular));
        line("rotate", self.rotate.to_string());
        line("ell", self.ell.to_string());
        line("epsilon", format!("{:?}", self.epsilon));
        s
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

/// `{:?}` prints the shortest string that parses back to the same `f64`.
fn join_f64(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        if out.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(ConfigError::Duplicate {
                line: i + 1,
                key: key.into(),
            });
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.into(),
        value: v.into(),
        reason: e.to_string(),
    })
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_value(key, x.trim())).collect()
}
