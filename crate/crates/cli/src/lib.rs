//! `lab`: runs one registered experiment against `siegel-core` and writes
//! `result.json` plus `sweep.csv`.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for a
//! usage error, 3 when the computation itself errors.

pub mod config;
pub mod experiments;
pub mod report;

use std::fs;
use std::path::Path;

pub use config::{Cli, ExperimentConfig, ExperimentName, Resolved};
pub use report::{Check, Record, Report};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] siegel_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Json(_) => 2,
            Self::Compute(siegel_core::Error::Parameter(_)) => 2,
            _ => 3,
        }
    }
}

/// Reads the optional JSON config and layers `flags` over it.
pub fn load_config(path: Option<&Path>, flags: ExperimentConfig) -> Result<ExperimentConfig, LabError> {
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| LabError::Usage(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| LabError::Usage(format!("{}: {e}", p.display())))?
        }
        None => ExperimentConfig::default(),
    };
    Ok(file.overlay(flags))
}

/// Resolves, runs, and writes one experiment.
pub fn run(cli: Cli) -> Result<Report, LabError> {
    let cfg = load_config(cli.config.as_deref(), cli.overrides)?;
    let resolved = config::resolve(cli.experiment, &cfg)?;
    let mut report = Report::new(resolved);
    experiments::run(&mut report)?;
    report.write(&cli.out)?;
    Ok(report)
}

/// Sizes rayon's global pool from `LAB_THREADS` when it is a positive integer.
pub fn init_threads() -> Result<(), LabError> {
    let Ok(raw) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| LabError::Usage(format!("LAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| LabError::Usage(format!("thread pool: {e}")))
}
