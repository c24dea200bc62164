use thiserror::Error;

/// Failure of a command, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: configuration, schema, IO. Exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The numerics broke down. Exit code 3.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
        }
    }
}

impl From<netinfer_core::Error> for CliError {
    fn from(e: netinfer_core::Error) -> Self {
        use netinfer_core::Error as E;
        match e {
            E::IndexOutOfRange { .. } | E::SelfPair(_) | E::Dimension(_) | E::Invalid(_) | E::StateSpaceTooLarge { .. } => {
                CliError::Validation(e.to_string())
            }
            E::NonFinite { .. }
            | E::PoissonOverflow { .. }
            | E::NotPositiveDefinite { .. }
            | E::AscentViolation { .. }
            | E::NonFiniteObjective { .. }
            | E::Singular(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
