use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by file IO, formats and the command line.
#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read `{path}`: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: checksum mismatch (expected {expected}, found {found})")]
    Checksum {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}: model file version {found} is not supported (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },

    #[error(transparent)]
    Core(#[from] focalmcc_core::Error),
}

impl IoError {
    /// Process exit code: 2 for bad input, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Core(_) | IoError::Write { .. } => 1,
            _ => 2,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::Read { .. } => "read",
            IoError::Write { .. } => "write",
            IoError::Row { .. } => "row",
            IoError::Format { .. } => "format",
            IoError::Checksum { .. } => "checksum",
            IoError::Version { .. } => "version",
            IoError::Core(_) => "runtime",
        }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;
