use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solution overflowed while integrating at mu = {mu:e}; bracket mu more tightly")]
    Overflow { mu: f64 },

    #[error("grid with {m} points is too coarse to resolve oscillations at mu = {mu:e}")]
    GridTooCoarse { mu: f64, m: usize },

    #[error("degenerate spectrum: mu_{i} and mu_{j} coincide ({value:e})")]
    DegenerateSpectrum { i: usize, j: usize, value: f64 },

    #[error("ill-posed data: condition estimate {condition:e} of the row {row} system exceeds {limit:e}")]
    IllPosed { row: usize, condition: f64, limit: f64 },

    #[error("spectral data rejected: {0}")]
    Rejected(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Tags an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
