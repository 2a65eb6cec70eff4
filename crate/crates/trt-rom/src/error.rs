//! Library error type.

use std::fmt;

/// Errors surfaced by solvers, file formats, and configuration parsing.
#[derive(Debug)]
pub enum Error {
    /// Configuration file or value rejected; message names the offending key.
    Config(String),
    /// Numerical failure (singular system, non-convergence, invalid state).
    Numerical(String),
    /// On-disk format violation (bad magic, truncation, fingerprint mismatch).
    Format(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical error: {msg}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
