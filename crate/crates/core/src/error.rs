use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("power iteration did not converge within {max_iter} iterations (last estimate {estimate})")]
    NonConvergence { max_iter: usize, estimate: f64 },

    #[error("normal equations not positive definite (pivot {pivot} at column {col}); increase lambda")]
    SingularSystem { col: usize, pivot: f64 },

    #[error("integration diverged at step {step}: state is not finite")]
    Diverged { step: usize },

    #[error("non-finite value produced in {op}")]
    NonFinite { op: &'static str },

    #[error("{path}: bad magic {found:#010x}, expected {expected:#010x}")]
    IdxMagic {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{path}: file length {found} does not match header ({expected} bytes)")]
    IdxLength {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("{path}: bad checkpoint header")]
    CheckpointHeader { path: PathBuf },

    #[error("{path}: unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an I/O error with the path or action that produced it.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
