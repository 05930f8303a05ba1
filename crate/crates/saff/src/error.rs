//! Error type shared by loaders, validators, and the learning pipeline.

use std::path::{Path, PathBuf};

/// Errors produced anywhere in the pipeline.
///
/// Every variant maps to a stable machine-readable category (see
/// [`SaffError::category`]) so command-line consumers can dispatch on it.
#[derive(Debug, thiserror::Error)]
pub enum SaffError {
    /// An input violates a documented invariant: out-of-range value,
    /// dimension mismatch, empty collection where one is required.
    #[error("{0}")]
    Invalid(String),

    /// A schema violation in an input file, with the offending location.
    #[error("{file}:{line}: {message}")]
    Schema {
        file: String,
        line: u64,
        message: String,
    },

    /// Malformed or contradictory configuration.
    #[error("config: {0}")]
    Config(String),

    /// Filesystem failure.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SaffError {
    pub fn invalid(message: impl Into<String>) -> Self {
        SaffError::Invalid(message.into())
    }

    pub fn schema(file: &Path, line: u64, message: impl Into<String>) -> Self {
        SaffError::Schema {
            file: file.display().to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        SaffError::Config(message.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SaffError::Io {
            path: path.into(),
            source,
        }
    }

    /// Machine-readable error category.
    pub fn category(&self) -> &'static str {
        match self {
            SaffError::Invalid(_) | SaffError::Schema { .. } => "validation",
            SaffError::Config(_) => "config",
            SaffError::Io { .. } => "io",
        }
    }

    /// Process exit code for the category: validation 3, config 4, io 5.
    pub fn exit_code(&self) -> i32 {
        match self {
            SaffError::Invalid(_) | SaffError::Schema { .. } => 3,
            SaffError::Config(_) => 4,
            SaffError::Io { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, SaffError>;
