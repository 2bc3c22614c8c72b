//! Error type shared across the solver stages.

use std::fmt;

/// Errors produced by instance handling, compilation, and the solvers.
///
/// The CLI maps `Parse`/`Validation`/`Dimension` to exit code 1 and
/// `Capacity`/`Config` to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed input document; the message names the offending field.
    Parse(String),
    /// Structurally valid input that violates an invariant.
    Validation(String),
    /// Mismatched vector or matrix dimensions.
    Dimension(String),
    /// Problem size exceeds what a solver is willing to handle.
    Capacity(String),
    /// Inconsistent or unusable configuration.
    Config(String),
    /// Internal invariant broken; indicates a bug.
    Internal(String),
}

impl Error {
    /// Prefix the message with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Error {
        let tag = |msg: String| format!("{stage}: {msg}");
        match self {
            Error::Parse(m) => Error::Parse(tag(m)),
            Error::Validation(m) => Error::Validation(tag(m)),
            Error::Dimension(m) => Error::Dimension(tag(m)),
            Error::Capacity(m) => Error::Capacity(tag(m)),
            Error::Config(m) => Error::Config(tag(m)),
            Error::Internal(m) => Error::Internal(tag(m)),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::Capacity(msg) => write!(f, "capacity exceeded: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
