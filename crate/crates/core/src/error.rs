use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid class prior: {0}")]
    InvalidPrior(String),

    #[error("degenerate class prior: {0}")]
    DegeneratePrior(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dataset is missing {0} labels")]
    MissingLabels(&'static str),

    #[error("label {label} at index {index} is out of range for {classes} classes")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },

    #[error("perturbation zeroed every entry of row {0}")]
    ZeroRow(usize),

    #[error("class {0} has no anchor candidate with positive probability")]
    NoAnchor(usize),

    #[error("similarity transition matrix is not learnable: T00 + T11 = {0} <= 1")]
    NotLearnable(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("row {row}: expected {expected} cells, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: cannot parse `{value}` as a number")]
    NonNumericCell {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("row {row}: label `{value}` is not a non-negative integer")]
    InvalidLabel { row: usize, value: String },

    #[error("row {row}: negative label {value}")]
    NegativeLabel { row: usize, value: i64 },

    #[error("matrix file line {line}: {reason}")]
    MatrixFormat { line: usize, reason: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input (arguments, files, configs) as opposed
    /// to failures while computing. The CLI maps these to exit code 1.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFinite(_) | Error::Io(_) | Error::ZeroRow(_) | Error::NoAnchor(_)
        )
    }
}
