use thiserror::Error;

/// Process-level failures with their documented exit codes: 1 for
/// identifiability outcomes, 2 for parse/shape/usage problems, 3 for
/// numerical validation failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Usage(String),

    #[error("no adversarial exists: attention identifiable")]
    Identifiable,

    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Identifiable => 1,
            CliError::Parse(_) | CliError::Usage(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<effattn::Error> for CliError {
    fn from(e: effattn::Error) -> Self {
        match e {
            effattn::Error::Identifiable => CliError::Identifiable,
            effattn::Error::Validation(_) | effattn::Error::Degenerate(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Parse(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
