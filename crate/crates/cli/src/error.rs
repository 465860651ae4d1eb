use std::fmt;

/// Failure of a run, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Unknown key, unparsable value or violated invariant.
    Config(String),
    /// Numerical or geometric failure of the pipeline.
    Infrastructure(quantsym_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infrastructure(_) | CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Infrastructure(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<quantsym_core::Error> for CliError {
    fn from(e: quantsym_core::Error) -> Self {
        CliError::Infrastructure(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
