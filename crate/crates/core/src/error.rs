use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty stream")]
    EmptyStream,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate sensitivities")]
    DegenerateSensitivities,

    #[error("zero leverage mass")]
    ZeroLeverageMass,

    #[error("index {index} out of range for dataset of size {len}")]
    DanglingIndex { index: usize, len: usize },

    #[error("empty candidate set")]
    NoCandidates,

    #[error("insufficient trials: {trials} (need at least {min})")]
    InsufficientTrials { trials: usize, min: usize },

    #[error("exhaustive enumeration unavailable: {0}")]
    NotEnumerable(String),

    #[error("solver failed at step {step}: {source}")]
    Solver {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
