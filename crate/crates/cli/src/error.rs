use availsearch_core::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse-error: line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation-error: {0}")]
    Validation(String),
    #[error("no-equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("internal-error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation(_) => 3,
            CliError::NoEquilibrium(_) => 4,
            CliError::Internal(_) => 5,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Validation(name) => CliError::Validation(name.to_string()),
            ModelError::Domain(_) | ModelError::InvalidShift { .. } => {
                CliError::Validation(e.to_string())
            }
            ModelError::CostTooLarge { .. }
            | ModelError::NoOligopoly
            | ModelError::DegenerateDispersion { .. }
            | ModelError::InvalidEquilibrium(_) => CliError::NoEquilibrium(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
