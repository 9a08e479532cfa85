use std::fmt;

use stbc_lab::Error;

/// A failed run, carrying its exit code class.
#[derive(Debug)]
pub enum Failure {
    /// A verification or analysis check did not hold (exit 1).
    Check(String),
    /// Bad flags, config or arguments (exit 2).
    Usage(String),
    /// File system trouble (exit 3).
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Usage(m) => write!(f, "usage: {m}"),
            Failure::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io { .. } => Failure::Io(msg),
            Error::LengthMismatch { .. }
            | Error::SizeMismatch(_)
            | Error::InvalidRate(_)
            | Error::NonSquareConstellation(_)
            | Error::UnsupportedConstellation
            | Error::SearchSpaceTooLarge { .. } => Failure::Usage(msg),
            _ => Failure::Check(msg),
        }
    }
}
