use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Core(#[from] attrition::Error),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 failed check, 2 bad configuration, 3 parameter out of range.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerificationFailed(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) if e.is_range() => 3,
            CliError::Core(attrition::Error::InvalidParameter(_) | attrition::Error::Precondition(_)) => 2,
            CliError::Core(_) | CliError::Internal(_) => 1,
        }
    }
}
