use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("every grid point failed for mode {0}")]
    AllPointsFailed(String),

    #[error("{0}")]
    Io(String),

    #[error("{0} validation check(s) failed")]
    ChecksFailed(usize),

    #[error(transparent)]
    Core(wipt_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::AllPointsFailed(_) => 3,
            CliError::Io(_) => 4,
            CliError::Core(wipt_core::Error::Io(_) | wipt_core::Error::Csv(_)) => 4,
            CliError::ChecksFailed(_) | CliError::Core(_) => 1,
        }
    }
}

impl From<wipt_core::Error> for CliError {
    fn from(e: wipt_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
