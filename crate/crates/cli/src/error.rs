use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qadvect::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("check failed: {}", .0.join("; "))]
    CheckFailed(Vec<String>),
}

impl CliError {
    /// 2 configuration, 3 numerical failure, 4 failed `--check`, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use qadvect::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::CheckFailed(_) => 4,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::InvalidGrid(_)
                | E::DimensionMismatch { .. }
                | E::ZeroNorm
                | E::UnsupportedStencil(_)
                | E::CflViolation { .. }
                | E::OutOfRange(_)
                | E::BackendMismatch(_)
                | E::Parse { .. } => 2,
                E::Unnormalized { .. }
                | E::SvdFailure(_)
                | E::VanishingBranch { .. }
                | E::BudgetExceeded { .. }
                | E::NonConvergence { .. } => 3,
                E::Io(_) => 1,
            },
        }
    }
}
