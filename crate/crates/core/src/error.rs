use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid machine model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("mass matrix block is not positive definite")]
    SingularInertia,

    #[error("no collision-free configuration found after {0} attempts")]
    ResetExhausted(usize),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge: residual {residual:.3e} exceeds {threshold:.3e}")]
    NonConvergent { residual: f64, threshold: f64 },

    #[error("malformed log {path}, row {row}: {reason}")]
    MalformedLog {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("cannot write output: {0}")]
    Write(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Write(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Write(e.to_string())
    }
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration or input files.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::Config { .. }
                | Error::Io { .. }
                | Error::Parse { .. }
                | Error::Shape(_)
                | Error::MalformedLog { .. }
                | Error::Checkpoint(_)
                | Error::InsufficientData(_)
        )
    }
}
