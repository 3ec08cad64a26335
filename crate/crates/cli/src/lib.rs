//! Batch driver for the recombination and RQS experiments.
//!
//! A run reads a JSON config naming one or more experiments, executes them,
//! writes one CSV per result table plus a JSON report, and maps the outcome
//! to an exit code: 0 when every assertion holds, 1 when one fails, 2 when
//! the config or the output directory is unusable.
//!
//! [`suite`] holds the fixed list of acceptance checks behind
//! `reproduce-all`; every check is a single named experiment.

use std::path::PathBuf;

use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod report;
pub mod runner;
pub mod seeds;
pub mod suite;

pub use config::{Config, ExperimentSpec};
pub use report::{Assertion, Outcome, Table};

/// Exit code for a run whose assertions all hold.
pub const EXIT_OK: i32 = 0;
/// Exit code when an assertion or a computation fails.
pub const EXIT_FAILED: i32 = 1;
/// Exit code for unusable input: bad config, unwritable output.
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "RECOMB_LAB_THREADS";

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] recomb_core::Error),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Core(_) => EXIT_FAILED,
            _ => EXIT_USAGE,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Sizes the global rayon pool from [`THREADS_ENV`] if set. Safe to call
/// more than once; later calls are ignored.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    if threads == 0 {
        return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
    }
    // an already initialised pool keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}
