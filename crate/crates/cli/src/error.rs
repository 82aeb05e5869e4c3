use std::fmt;

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed invocation (exit 1).
    Usage(String),
    /// An input broke a documented bound (exit 2).
    Validation(String),
    /// I/O or other unexpected failure (exit 3).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<hraid_core::Error> for CliError {
    fn from(e: hraid_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}
