use sdred::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 0 success, 1 verification or runtime failure, 2 configuration error,
    /// 3 numerical divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 1,
            CliError::Numerical(_) => 3,
            CliError::Core(e) => match e {
                Error::Divergence { .. } | Error::NonConvergence { .. } => 3,
                Error::InvalidArgument(_)
                | Error::StepOutOfRange { .. }
                | Error::NotLogConcave { .. }
                | Error::UnknownName { .. }
                | Error::ShapeMismatch { .. }
                | Error::ComplexNotSupported => 2,
                _ => 1,
            },
        }
    }
}
