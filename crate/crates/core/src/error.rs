use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("untrackable initial pose: {0}")]
    Untrackable(String),
    #[error("timestamp mismatch: {0}")]
    TimestampMismatch(String),
    #[error("time {0} s outside the trajectory")]
    TimeOutOfRange(f64),
    #[error("resampling weights are all zero or not finite")]
    DegenerateWeights,
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status used by the command-line tool for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Mesh(_) | Error::Format(_) => 4,
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidMeasurement(_) => 5,
            Error::DimensionMismatch(_) => 6,
            Error::Untrackable(_) => 7,
            Error::TimestampMismatch(_) => 8,
            Error::TimeOutOfRange(_) | Error::DegenerateWeights => 9,
        }
    }
}
