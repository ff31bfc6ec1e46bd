//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by model construction, inference, learning and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("matrix is not positive definite in {context} (Cholesky failed after regularization)")]
    NotPositiveDefinite { context: &'static str },

    #[error("empty input to {context}")]
    EmptyInput { context: &'static str },

    #[error("degenerate shape: {reason}")]
    DegenerateShape { reason: String },

    #[error("index {index} out of range for {context} (size {size})")]
    IndexOutOfRange {
        context: &'static str,
        index: usize,
        size: usize,
    },

    #[error("parse error at {location}: {message}")]
    ParseError { location: String, message: String },

    #[error("schema violation in record {record}, field `{field}`: {message}")]
    SchemaViolation {
        record: usize,
        field: &'static str,
        message: String,
    },

    #[error("cardinality mismatch in record {record}, field `{field}`: value {value} not below {bound}")]
    CardinalityMismatch {
        record: usize,
        field: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("model/dataset disagree on {what}: model has {model}, dataset has {dataset}")]
    ModelDataMismatch {
        what: &'static str,
        model: String,
        dataset: String,
    },

    #[error("too few samples for {context}: need at least {needed}, got {actual}")]
    TooFewSamples {
        context: &'static str,
        needed: usize,
        actual: usize,
    },

    #[error("structure search supports at most {max} nodes, got {actual}")]
    TooManyNodes { max: usize, actual: usize },

    #[error("k-means produced an unfixable empty cluster (k={k}, distinct points={distinct})")]
    EmptyCluster { k: usize, distinct: usize },

    #[error("sample count mismatch: {left} vs {right}")]
    SampleCountMismatch { left: usize, right: usize },

    #[error("invalid configuration: {message}")]
    InvalidConfig { message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
