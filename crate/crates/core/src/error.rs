use thiserror::Error;

/// Errors raised by the simulator, learner, oracles and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cell configuration: {0}")]
    InvalidCell(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("ue {ue} is out of coverage in slot {slot}")]
    OutOfCoverage { ue: usize, slot: usize },

    #[error("inconsistent environment: {0}")]
    InconsistentEnvironment(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid preparation vector: {0}")]
    InvalidDecision(String),

    #[error("exact oracle supports at most {max} decision entries, instance has {actual}")]
    OracleCapacity { max: usize, actual: usize },

    #[error("invalid comparator: {0}")]
    InvalidComparator(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{context}: {source}")]
    Run {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn within(self, context: impl Into<String>) -> Self {
        Error::Run {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
