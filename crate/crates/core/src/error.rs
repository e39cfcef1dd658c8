use std::io;

use thiserror::Error;

/// Errors raised anywhere in the parsing toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A non-finite value appeared; `op` names the operation that produced it.
    #[error("numeric error in {op}: {detail}")]
    Numeric { op: String, detail: String },

    /// A head assignment or parse matrix does not describe a tree.
    #[error("invalid tree at row {row}: {detail}")]
    Validity { row: usize, detail: String },

    /// Input data is well-formed text but semantically inconsistent.
    #[error("data error at {locus}: {detail}")]
    Data { locus: String, detail: String },

    /// Malformed input text.
    #[error("parse error at {locus}: {detail}")]
    Parse { locus: String, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn parse(locus: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            locus: locus.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn data(locus: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Data {
            locus: locus.into(),
            detail: detail.into(),
        }
    }
}
