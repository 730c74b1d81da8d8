//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or grid dimensions do not match what an operation requires.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A documented precondition was violated by the caller.
    #[error("contract violation in {op}: {detail}")]
    Contract { op: &'static str, detail: String },

    /// A loss or parameter became NaN/Inf during an update.
    #[error("non-finite value in {op}: {detail}")]
    NonFinite { op: &'static str, detail: String },

    /// Malformed checkpoint, config, or map file.
    #[error("format error in {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub fn contract(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Contract {
            op,
            detail: detail.into(),
        }
    }

    pub fn non_finite(op: &'static str, detail: impl Into<String>) -> Self {
        Error::NonFinite {
            op,
            detail: detail.into(),
        }
    }

    pub fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
