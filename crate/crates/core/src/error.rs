use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expected a real tensor, got complex data")]
    ComplexNotSupported,

    #[error("step size {gamma} outside the valid interval (0, {upper})")]
    StepOutOfRange { gamma: f64, upper: f64 },

    #[error("iteration diverged at step {iteration}: non-finite iterate")]
    Divergence { iteration: usize },

    #[error("no convergence within {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("log-concavity certificate failed at x = {at}: second difference {value:e}")]
    NotLogConcave { at: f64, value: f64 },

    #[error("missing trace column `{0}`")]
    MissingColumn(&'static str),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("truncated file: expected {expected} payload bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
