use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants map onto the CLI exit classes: configuration and range
/// problems are validation failures, numerical/evaluation/regime problems
/// are numerical failures, and resource problems stand alone.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    Numerical { iterations: usize, residual: f64 },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Configuration(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn eval(msg: impl Into<String>) -> Self {
        Error::Evaluation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
