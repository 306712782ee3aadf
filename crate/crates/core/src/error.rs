//! Crate-wide error type.

/// Errors produced by the diarization toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A text input (RTTM, score file, ...) could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An argument violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Inputs that must agree (frame shift, recording id, ...) do not.
    #[error("configuration error: {0}")]
    Config(String),

    /// A rate has a zero denominator and is undefined.
    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    /// Synthetic data generation could not satisfy its constraints.
    #[error("generation failed: {0}")]
    Generation(String),

    /// Invariant violation inside the toolkit; indicates a bug in the caller
    /// supplied plumbing (mismatched matrix sizes, inconsistent labels).
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
