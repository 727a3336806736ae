//! Experiment runner: configuration presets, the named experiments and the
//! files they emit.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{Absorption, Experiment, ExperimentConfig, SCHEMA_VERSION};
pub use experiments::run_experiment;
pub use output::{emit_outputs, Check, Manifest, RunOutput, Summary};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "NMQSD_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical fault: {0}")]
    Numerical(#[from] nmqsd_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(_) => 4,
            Self::Io { .. } => 1,
        }
    }
}

/// Worker cap from `NMQSD_THREADS`; unset or empty means all cores.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        _ => Ok(None),
    }
}

/// Outcome of a run that completed without a fault.
#[derive(Clone, Debug)]
pub struct Completed {
    pub config: ExperimentConfig,
    pub summary: Option<Summary>,
    pub files: Vec<PathBuf>,
}

impl Completed {
    /// 0 when every declared check passed (or nothing was run), 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match &self.summary {
            Some(s) if !s.passed => 3,
            _ => 0,
        }
    }
}

/// Runs `cfg` and writes its files into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path, threads: Option<usize>) -> Result<Completed, CliError> {
    let (resolved, out) = run_experiment(cfg, threads)?;
    let files = emit_outputs(&resolved, &out, dir)?;
    Ok(Completed { config: resolved, summary: out.summary, files })
}

/// Re-runs the configuration recorded in a manifest.
pub fn replay(manifest: &Path, dir: Option<&Path>, threads: Option<usize>) -> Result<Completed, CliError> {
    let m = Manifest::read(manifest)?;
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&m.config.output_dir));
    run_to_dir(&m.config, &dir, threads)
}
