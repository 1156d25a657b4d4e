//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid static configuration: qubit counts, indices, layer dims.
    #[error("configuration error: {0}")]
    Config(String),

    /// Runtime shape mismatch between tensors, vectors or windows.
    #[error("shape error: {0}")]
    Shape(String),

    /// A caller violated an operation's contract (empty input, bad range...).
    #[error("contract error: {0}")]
    Contract(String),

    /// CSV row that could not be parsed, with its 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// CSV header does not match the expected column set.
    #[error("schema error: {0}")]
    Schema(String),

    /// Gaps that the cleaning rules cannot fill; lists the timestamps.
    #[error("cleaning error: unfillable gaps at {0}")]
    Cleaning(String),

    /// Degenerate scaling statistics (constant column).
    #[error("scaling error: {0}")]
    Scaling(String),

    /// Circuit contains a gate the gradient path cannot differentiate.
    #[error("unsupported circuit: {0}")]
    UnsupportedCircuit(String),

    /// Training aborted (divergence, NaN gradients).
    #[error("training error: {0}")]
    Training(String),

    /// Model file could not be decoded or has an unknown format version.
    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
