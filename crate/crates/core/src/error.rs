use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BgnnError>;

#[derive(Debug, Error)]
pub enum BgnnError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty batch passed to {0}")]
    EmptyBatch(&'static str),

    #[error(
        "memory budget exceeded: requested {requested} bytes with {live} live, budget {budget}"
    )]
    BudgetExceeded {
        requested: usize,
        live: usize,
        budget: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl BgnnError {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        BgnnError::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BgnnError::Io {
            path: path.into(),
            source,
        }
    }
}
