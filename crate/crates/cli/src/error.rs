use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] lnspdc::Error),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// File-system or other environmental failure.
pub const EXIT_IO: i32 = 1;
/// Bad config, flags or input data.
pub const EXIT_CONFIG: i32 = 2;
/// A computation failed on valid input.
pub const EXIT_NUMERICAL: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) | CliError::Core(lnspdc::Error::Io(_)) => EXIT_IO,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
