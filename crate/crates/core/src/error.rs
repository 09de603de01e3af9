use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("environment error: {0}")]
    Env(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training diverged at iteration {iteration}: {reason}")]
    TrainingDiverged { iteration: usize, reason: String },

    #[error("evaluation failed at step {step}: {reason}")]
    Evaluation { step: usize, reason: String },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }

    pub(crate) fn arg(reason: impl Into<String>) -> Self {
        Error::Argument(reason.into())
    }
}
