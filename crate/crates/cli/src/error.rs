use std::fmt;
use std::process::ExitCode;

/// Failure classes, each mapped to a distinct process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input files: exit 2.
    Input(String),
    /// Power flow failed to converge for at least one cell: exit 3.
    NonConvergence(String),
    /// Anything else, including failure to write outputs: exit 1.
    Internal(String),
}

impl CliError {
    pub fn input(e: impl fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }

    pub fn internal(e: impl fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Internal(_) => 1,
            CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::NonConvergence(m) => write!(f, "power flow did not converge: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
