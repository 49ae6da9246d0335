use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("vector must have at least one coordinate")]
    EmptyVector,

    #[error("division by zero at coordinate {index}")]
    DivisionByZero { index: usize },

    #[error("non-finite value {value} at coordinate {index} ({context})")]
    NonFinite {
        index: usize,
        value: f64,
        context: &'static str,
    },

    #[error("invalid hyperparameter {name} = {value}: {reason}")]
    InvalidHyper {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("theorem precondition violated: {0}")]
    Precondition(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("outside problem domain: {0}")]
    Domain(String),

    #[error("non-finite activation in layer {layer}")]
    MlpNonFinite { layer: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("step {step} outside schedule range [0, {total}]")]
    StepOutOfRange { step: u64, total: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
