use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const OUT_ENV: &str = "RSBL_OUT";
pub const DEFAULT_OUT: &str = "rsbl-out";

/// `--out` beats the config's `out`, which beats `RSBL_OUT`, which beats
/// `rsbl-out` in the working directory.
pub fn resolve_out_dir(
    flag: Option<&Path>,
    config: Option<&str>,
    env: Option<OsString>,
) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = config {
        return PathBuf::from(p);
    }
    match env {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

/// Long-format record: one per (configuration, trial, metric).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: &'static str,
    /// canonical string of the configuration, also the stream-derivation key
    pub config: String,
    pub trial: usize,
    pub seed: u64,
    pub stream: u64,
    pub metric: &'static str,
    pub value: f64,
    pub retries: usize,
    /// diagnostics such as `infinite`, `no_convergence` or `ill_conditioned`
    pub flags: String,
}

/// Writes `rows` with a header taken from the field names of `T`. Floats go
/// through the shortest round-trip formatter of the `csv` crate.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Text for a matplotlib script that draws every `cluster_*.csv` plot-data
/// file found next to it.
pub fn cluster_plot_script(files: &[(String, String, String)]) -> String {
    let mut s = String::from(
        "#!/usr/bin/env python3\n\
         # Draws the cluster-robustness quantile curves. Usage: python3 plot_cluster.py\n\
         import csv\n\
         import os\n\
         from collections import defaultdict\n\
         \n\
         import matplotlib\n\
         matplotlib.use(\"Agg\")\n\
         import matplotlib.pyplot as plt\n\
         \n\
         HERE = os.path.dirname(os.path.abspath(__file__))\n\
         PLOTS = [\n",
    );
    for (file, variant, sweep) in files {
        s.push_str(&format!("    ({file:?}, {variant:?}, {sweep:?}),\n"));
    }
    s.push_str(
        "]\n\
         \n\
         \n\
         def load(name):\n\
         \x20   curves = defaultdict(list)\n\
         \x20   with open(os.path.join(HERE, name), newline=\"\") as f:\n\
         \x20       for row in csv.DictReader(f):\n\
         \x20           curves[int(row[\"d\"])].append(\n\
         \x20               tuple(float(row[k]) for k in (\"abscissa\", \"median\", \"q25\", \"q75\"))\n\
         \x20           )\n\
         \x20   return curves\n\
         \n\
         \n\
         for name, variant, sweep in PLOTS:\n\
         \x20   fig, ax = plt.subplots(figsize=(5, 4))\n\
         \x20   for d, pts in sorted(load(name).items()):\n\
         \x20       pts.sort()\n\
         \x20       x = [p[0] for p in pts]\n\
         \x20       line, = ax.loglog(x, [p[1] for p in pts], marker=\"o\", label=f\"d={d}\")\n\
         \x20       ax.fill_between(x, [p[2] for p in pts], [p[3] for p in pts], color=line.get_color(), alpha=0.2)\n\
         \x20   ax.set_xlabel(\"beta\" if sweep == \"beta\" else \"relgap\")\n\
         \x20   ax.set_ylabel(\"tan angle\")\n\
         \x20   ax.set_title(f\"{variant}, {sweep} sweep\")\n\
         \x20   ax.legend()\n\
         \x20   fig.tight_layout()\n\
         \x20   fig.savefig(os.path.join(HERE, name.replace(\".csv\", \".png\")), dpi=150)\n",
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let env = || Some(OsString::from("/env"));
        assert_eq!(
            resolve_out_dir(Some(Path::new("/flag")), Some("/cfg"), env()),
            PathBuf::from("/flag")
        );
        assert_eq!(
            resolve_out_dir(None, Some("/cfg"), env()),
            PathBuf::from("/cfg")
        );
        assert_eq!(resolve_out_dir(None, None, env()), PathBuf::from("/env"));
        assert_eq!(
            resolve_out_dir(None, None, Some(OsString::new())),
            PathBuf::from(DEFAULT_OUT)
        );
        assert_eq!(
            resolve_out_dir(None, None, None),
            PathBuf::from(DEFAULT_OUT)
        );
    }

    #[test]
    fn floats_round_trip_through_csv() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
        }
        let dir = std::env::temp_dir().join(format!("rsbl-output-test-{}", std::process::id()));
        ensure_dir(&dir).unwrap();
        let path = dir.join("f.csv");
        let xs = [0.1, 1.0 / 3.0, 1e-300, 6.02e23, f64::INFINITY, -0.0];
        write_csv(&path, &xs.iter().map(|&x| Row { x }).collect::<Vec<_>>()).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(text.lines().next(), Some("x"));
        for (a, b) in xs.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits(), "{text}");
        }
        fs::remove_dir_all(&dir).unwrap();
    }
}
