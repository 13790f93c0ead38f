//! Error type shared across the crate.

use std::io;
use thiserror::Error;

/// Errors produced by geometry construction, file parsing, and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument violates its domain (non-positive distance,
    /// ratio outside (0,1), empty grid, ...).
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A scenario or config file failed to parse. Carries the 1-based line
    /// number of the offending line (0 for file-level problems such as a
    /// missing key).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
