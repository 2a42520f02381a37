use casimir_core::Category;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error(transparent)]
    Core(#[from] casimir_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => Category::Config.exit_code(),
            Self::Data(_) => Category::Data.exit_code(),
            Self::Core(e) => e.category().exit_code(),
        }
    }
}

/// Lifts any core module error through the crate-level error.
pub fn core<E: Into<casimir_core::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}

pub type Result<T> = std::result::Result<T, CliError>;
