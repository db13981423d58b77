//! MiniShop: a deterministic, text-rendered shopping site.

use std::path::Path;

use thiserror::Error;

pub mod catalog;
pub mod generate;
pub mod goals;
pub mod page;
pub mod score;
pub mod search;

pub use catalog::{load_catalog, Catalog, Product};
pub use generate::generate_catalog;
pub use goals::{generate_goals, load_goals, save_goals, GoalSpec};
pub use page::{render, reset, step, DetailKind, Observation, PageState, PageType, ResultsOrigin, StepOutcome};
pub use score::{best_purchase, score, Purchase};
pub use search::{search_rank, tokenize};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("parse error at line {line}, column {column} (field `{field}`): {message}")]
    Parse { line: usize, column: usize, field: String, message: String },
    #[error("duplicate product id {0:?}")]
    DuplicateId(String),
    #[error("invalid product {id:?}: {reason}")]
    InvalidProduct { id: String, reason: String },
    #[error("invalid goal at index {index}: {reason}")]
    InvalidGoal { index: usize, reason: String },
    #[error("unknown product id {0:?}")]
    UnknownProductId(String),
    #[error("search query has no tokens")]
    EmptyQuery,
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("step called on a finished episode")]
    SteppedAfterDone,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl EnvError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        EnvError::Io { path: path.display().to_string(), source }
    }
}
