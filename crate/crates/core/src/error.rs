use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the key generation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: {message}")]
    Validation { line: u64, message: String },

    #[error("duplicate uplink counter {0}")]
    DuplicateCounter(u64),

    #[error("uplink counters not strictly increasing at counter {0}")]
    Unordered(u64),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("no aligned samples")]
    NoAlignedSamples,

    #[error("insufficient samples: have {have}, need at least {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("no configured code covers a bit disagreement rate of {0}")]
    NoCodeCovers(f64),

    #[error("insufficient residual entropy: need ≥{need}, have {have}")]
    InsufficientEntropy { need: usize, have: i64 },

    #[error("empty key")]
    EmptyKey,

    #[error("no eavesdropper data")]
    NoEveData,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
