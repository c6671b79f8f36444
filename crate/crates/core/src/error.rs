use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("label {label} at row {row} is out of range for {n_classes} classes")]
    LabelOutOfRange { row: usize, label: u32, n_classes: u32 },

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    #[error("separation index is degenerate: only one class present")]
    SingleClass,

    #[error(
        "distance matrix for m={m} needs {needed} bytes, over the {budget}-byte budget; \
         use the tiled or sampled nearest-neighbor path instead"
    )]
    MemoryBudget { m: usize, needed: u128, budget: u128 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: bar violates low <= open/close <= high or volume >= 0: {message}")]
    InvalidBar { line: usize, message: String },

    #[error("gap of {missing} missing minutes after t={after} exceeds max_gap={max_gap}")]
    GapTooLong { after: i64, missing: i64, max_gap: i64 },

    #[error("config validation failed: {0}")]
    Config(String),

    #[error("stale artifact {path}: config hash {found} does not match {expected}")]
    Stale { path: PathBuf, found: String, expected: String },

    #[error("cache format: {0}")]
    Cache(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
