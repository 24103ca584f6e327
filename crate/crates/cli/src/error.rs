use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] formbound::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit status: 2 for anything the user can fix in the config, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use formbound::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::InvalidArgument(_) | E::DimensionTooSmall(_) | E::Parse(_)) => 2,
            CliError::Core(E::InvalidGrid(_) | E::StepTooLarge { .. } | E::StabilityViolation { .. }) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}
