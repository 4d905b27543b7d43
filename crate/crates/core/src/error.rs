use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the generation, processing and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("degenerate scan: standard deviation is zero")]
    DegenerateScan,

    #[error("class {label} has {count} examples, at least {required} required")]
    InsufficientClass {
        label: u32,
        count: usize,
        required: usize,
    },

    #[error("invalid hyperparameter for {kind}: {message}")]
    InvalidParam { kind: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
