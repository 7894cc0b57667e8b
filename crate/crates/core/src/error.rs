use thiserror::Error;

/// Errors raised by the model, sampler and diagnostic routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WapError {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is numerically rank deficient: {0}")]
    Rank(String),

    #[error("invalid index: {0}")]
    Index(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<WapError>,
    },
}

impl WapError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        WapError::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        WapError::Shape(msg.into())
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        WapError::Iteration {
            iteration,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, WapError>;
