use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("singular system (condition estimate {condition:.3e}): {context}")]
    Singular { condition: f64, context: String },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("parameters diverged at iteration {iteration} (norm {norm:.3e})")]
    Divergence { iteration: usize, norm: f64 },

    #[error("no convergence after {iterations} iterations (duality gap {gap:.3e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// True for failures caused by bad inputs rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Protocol(_) => true,
            Error::AtStep { source, .. } => source.is_input_error(),
            _ => false,
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
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
