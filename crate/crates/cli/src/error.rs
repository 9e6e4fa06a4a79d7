use std::path::Path;

use thiserror::Error;

/// Failure classes mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Data(format!("{}: {err}", path.display()))
    }

    /// Core error raised while handling `path`.
    pub fn at(path: &Path, err: spectral_core::Error) -> Self {
        match Self::from(err) {
            Self::Config(m) => Self::Config(format!("{}: {m}", path.display())),
            Self::Data(m) => Self::Data(format!("{}: {m}", path.display())),
        }
    }
}

impl From<spectral_core::Error> for CliError {
    fn from(err: spectral_core::Error) -> Self {
        match err {
            spectral_core::Error::InvalidParameter { .. } => Self::Config(err.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
