//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Evaluation was requested outside the domain of a function
    /// (no silent extrapolation anywhere in the crate).
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced or encountered a non-finite value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A data or configuration file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The sampler could not be started or could not make progress.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid<S: Into<String>>(msg: S) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain<S: Into<String>>(msg: S) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric<S: Into<String>>(msg: S) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn parse<S: Into<String>>(line: usize, msg: S) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
