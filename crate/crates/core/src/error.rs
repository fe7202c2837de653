use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: malformed JSON: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("line {line}: field `{field}` is negative ({value})")]
    NegativeCount {
        line: usize,
        field: &'static str,
        value: i64,
    },

    #[error("line {line}: {message}")]
    InvalidRecord { line: usize, message: String },

    #[error("matrix header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,

    #[error("unknown model kind `{0}`")]
    UnknownModelKind(String),

    #[error("parameter arity mismatch: {0}")]
    ArityMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
