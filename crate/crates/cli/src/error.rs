use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Library(#[from] coupled_susy::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use coupled_susy::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Library(
                E::SingularSigma { .. }
                | E::SingularY { .. }
                | E::SingularD22
                | E::RankDrop
                | E::RankDeficientPivot { .. }
                | E::SingularJost { .. },
            ) => 4,
            CliError::Library(
                E::DimensionMismatch { .. }
                | E::InvalidChannels(_)
                | E::InvalidFactorization(_)
                | E::InvalidParametrization(_)
                | E::PreconditionViolated(_)
                | E::NotTwoChannel(_),
            ) => 2,
            CliError::Library(_) | CliError::Io { .. } => 1,
        }
    }
}
