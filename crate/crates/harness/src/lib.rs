//! Experiment orchestration for the anharmonic lattice model: configuration, Monte Carlo
//! theorem runs, property suites and machine-readable reports.

pub mod config;
pub mod report;
pub mod suites;
pub mod theorems;

use std::time::Instant;

use thiserror::Error;

pub use config::{ExperimentConfig, ExperimentKind, OutputFormat};
pub use report::{emit, RunReport};
pub use suites::run_suite;
pub use theorems::run_theorem;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Numerical(#[from] anharmonic_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    /// 2 for configuration problems, 3 for numerical failures and I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Numerical(anharmonic_core::Error::InvalidParams(_))
            | Self::Numerical(anharmonic_core::Error::WindowViolation { .. }) => 2,
            Self::Numerical(_) | Self::Io(_) => 3,
        }
    }
}

/// Runs one experiment on a pool of `cfg.threads` workers (0 = all cores).
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| {
        if cfg.kind.is_theorem() {
            run_theorem(cfg)
        } else {
            run_suite(cfg.kind, cfg)
        }
    })?;
    report.wall_clock_s = start.elapsed().as_secs_f64();
    Ok(report)
}
