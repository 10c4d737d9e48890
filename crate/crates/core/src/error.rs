use std::fmt;

use thiserror::Error;

/// A single problem found while validating an interferometer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Index of the offending segment, if the problem is local to one.
    pub segment: Option<usize>,
    pub message: String,
}

impl Violation {
    pub(crate) fn at(segment: usize, message: impl Into<String>) -> Self {
        Self {
            segment: Some(segment),
            message: message.into(),
        }
    }

    pub(crate) fn global(message: impl Into<String>) -> Self {
        Self {
            segment: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.segment {
            Some(i) => write!(f, "segment {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid interferometer: {}", join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("insufficient grid resolution: {0}")]
    Resolution(String),

    #[error("analysis failed: {0}")]
    Analysis(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
