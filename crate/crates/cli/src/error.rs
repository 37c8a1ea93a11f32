//! CLI-level errors, each mapping to a fixed process exit code.

use thiserror::Error;

/// Anything that can abort a run.
///
/// Exit codes: configuration or problem errors exit 1, I/O errors exit 2,
/// numeric failures exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration, arguments, or problem description.
    #[error("config error: {0}")]
    Config(String),
    /// Filesystem failures while reading inputs or writing outputs.
    #[error("i/o error: {0}")]
    Io(String),
    /// A numeric routine failed (non-finite values, failed factorization).
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    /// The process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<mgps_core::Error> for CliError {
    fn from(e: mgps_core::Error) -> Self {
        match e {
            mgps_core::Error::Parameter(m) | mgps_core::Error::Index(m) => CliError::Config(m),
            mgps_core::Error::Numeric(m) => CliError::Numeric(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
