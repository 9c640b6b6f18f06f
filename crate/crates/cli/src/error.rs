use thiserror::Error;

use jabberprobe::probes::ProbeError;

/// Failures of a subcommand, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration: exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Unreadable, malformed or inconsistent input data: exit code 3.
    #[error("data error: {0}")]
    Data(String),
    /// Training diverged: exit code 4.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub(crate) fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl From<ProbeError> for CliError {
    fn from(err: ProbeError) -> Self {
        match err {
            ProbeError::NumericalAbort { .. } => CliError::Numerical(err.to_string()),
            ProbeError::BadConfig(_) => CliError::Config(err.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
