use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The loss is infinite, e.g. a control record with π = 1.
    #[error("infinite loss: {0}")]
    InfiniteLoss(String),

    #[error("Gram matrix has the wrong signature (spectrum head {spectrum:?})")]
    Signature { spectrum: Vec<f64> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("sampler made no progress: {0}")]
    Progress(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by malformed or missing input data.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }
}
