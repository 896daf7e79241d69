use thiserror::Error;

/// Errors produced by parsing, validation, and tracking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate embedding vector: {detail}")]
    DegenerateVector { detail: String },

    #[error("{path}:{line}: parse error: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: value out of range: {msg}")]
    Range {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: invalid format: {msg}")]
    Format { path: String, msg: String },

    #[error("frame {frame} does not advance past frame {last}")]
    OutOfOrderFrame { frame: u64, last: u64 },

    #[error("invalid scenario spec: {0}")]
    Spec(String),

    #[error("unknown preset: {0:?}")]
    UnknownPreset(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
