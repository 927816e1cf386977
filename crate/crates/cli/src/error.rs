use std::fmt;

/// CLI failure classes, mapped onto the documented exit codes:
/// usage problems exit 2, simulation caps exit 3, I/O failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Cap(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Cap(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Cap(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<fpsearch::Error> for CliError {
    fn from(e: fpsearch::Error) -> Self {
        match e {
            fpsearch::Error::HorizonTooLarge { .. }
            | fpsearch::Error::RegisterTooLarge { .. }
            | fpsearch::Error::ThresholdUnreachable { .. } => CliError::Cap(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
