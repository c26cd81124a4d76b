use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// `row` and `column` are 1-based positions in the input file; 0 means
    /// the whole row (or file) is at fault.
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("index {index} out of range for {what} of size {size}")]
    Index {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("pattern must contain at least one attribute")]
    EmptyPattern,

    #[error("itemset {0:?} is not closed")]
    NotClosed(Vec<usize>),

    #[error("matrix mismatch: {0}")]
    MatrixMismatch(String),

    #[error("concept budget of {budget} exceeded")]
    Capacity { budget: usize },

    #[error("missing required parameter `{0}`")]
    MissingParameter(&'static str),

    #[error("parameter `{name}` = {value} out of range: {expected}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        row: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            column,
            message: message.into(),
        }
    }

    /// Errors caused by bad input data rather than bad invocation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Invalid(_)
                | Error::MatrixMismatch(_)
                | Error::Capacity { .. }
                | Error::Serialize(_)
        )
    }
}
