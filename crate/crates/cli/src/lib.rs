//! Batch front end for room-scale authentication experiments: read a TOML
//! experiment, run the sweep, write `sweep.csv`, `calibration.csv` and
//! `summary.txt`.

pub mod config;
pub mod run;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{parse_config, Diagnostic, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config:\n{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("cannot write outputs to {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("run failed: {0}")]
    Runtime(#[from] phyauth::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read { .. } | CliError::Invalid(_) => 2,
            CliError::Write { .. } | CliError::Runtime(_) => 3,
        }
    }
}

pub fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

/// Diagnostics for the config at `path`; empty means runnable.
pub fn validate_file(path: &Path) -> Result<Vec<Diagnostic>, CliError> {
    let text = read(path)?;
    Ok(parse_config(&text).err().unwrap_or_default())
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Loads, validates and runs the config at `path`, writing outputs into
/// `out_dir`. Returns the files written.
pub fn run_file(path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let text = read(path)?;
    let mut cfg = parse_config(&text).map_err(CliError::Invalid)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let report = match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| phyauth::Error::InvalidParameter(format!("thread pool: {e}")))?;
            pool.install(|| run::execute(&cfg))?
        }
        None => run::execute(&cfg)?,
    };
    let files = [
        (run::SWEEP_FILE, run::sweep_csv(&cfg, &report)),
        (run::CALIBRATION_FILE, run::calibration_csv(&report)),
        (run::SUMMARY_FILE, run::summary(&cfg, &text, &report)),
    ];
    run::write_outputs(out_dir, &files).map_err(|source| CliError::Write { path: out_dir.to_path_buf(), source })
}
