use std::fmt;

/// Errors surfaced by simulation, training, and serialization.
#[derive(Debug)]
pub enum Error {
    /// Invalid argument or configuration value.
    Invalid(String),
    /// Shape or dimension mismatch between inputs.
    Dimension(String),
    /// A numeric quantity left the finite range.
    NonFinite(String),
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// Malformed or unsupported file contents.
    Format(String),
    /// Inputs that must agree with each other do not (e.g. mismatched lattices).
    Inconsistent(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid argument: {msg}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Inconsistent(msg) => write!(f, "inconsistent data: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
