use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("label {label:?} in the {split} split never appears in the training split")]
    UnknownLabel { label: String, split: String },

    #[error("duplicate document id {id:?} in the {split} split")]
    DuplicateId { id: String, split: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty vocabulary: no training document produced a token")]
    EmptyVocabulary,

    #[error("dimension mismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("infeasible dual variable alpha[{index}] = {value}")]
    InfeasibleDual { index: usize, value: f64 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Coarse failure class, used by the command-line front end to pick an
    /// exit code.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::NonFinite { .. } | Error::InfeasibleDual { .. } => ErrorKind::Numeric,
            Error::Parse { .. }
            | Error::UnknownLabel { .. }
            | Error::DuplicateId { .. }
            | Error::EmptyVocabulary
            | Error::DimensionMismatch { .. }
            | Error::Data(_)
            | Error::Io { .. } => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}
