//! Batch evaluation: config, worker pool, metrics and report files.

use std::path::{Path, PathBuf};

use thiserror::Error;

mod batch;
pub mod config;
pub mod log;
pub mod report;

pub use batch::{build_backend, run_batch, Batch};
pub use config::{BackendConfig, CatalogSource, GoalSource, PolicyKind, RunConfig};
pub use log::{append_trajectory_log, read_trajectory_log, write_trajectory_log, TRAJECTORY_FILE};
pub use report::{aggregate, write_report, AggregateReport, LengthBucket, DEFAULT_BUCKET_EDGES};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no episodes to aggregate")]
    EmptyInput,
    #[error("invalid bucket edges: {0}")]
    InvalidBuckets(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Log { path: PathBuf, line: usize, message: String },
}

impl EvalError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        EvalError::Io { path: path.to_path_buf(), source }
    }

    /// Errors caused by bad inputs rather than failures while running.
    pub fn is_config(&self) -> bool {
        matches!(self, EvalError::Config(_) | EvalError::InvalidBuckets(_))
    }
}
