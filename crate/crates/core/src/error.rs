use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate spectrum: {0}")]
    Degenerate(&'static str),

    #[error("only one class present in {0}")]
    SingleClass(&'static str),

    #[error("width changed at step {step}: expected {expected}, got {actual}")]
    WidthChanged {
        step: u64,
        expected: usize,
        actual: usize,
    },

    #[error("malformed {format} data at byte offset {offset}: {reason}")]
    Format {
        format: &'static str,
        offset: u64,
        reason: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(value: f64, what: &'static str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
