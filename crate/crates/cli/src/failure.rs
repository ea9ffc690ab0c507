use std::fmt;
use std::path::Path;

use rdagg::Error;

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_CAPACITY: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

/// A failed command: message for stderr plus the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new(EXIT_IO, format!("{}: {e}", path.display()))
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(EXIT_VALIDATION, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Csv(c) if c.is_io_error() => EXIT_IO,
            Error::Json(j) if j.is_io() => EXIT_IO,
            Error::Capacity { .. } => EXIT_CAPACITY,
            Error::NormalizationUndefined(_)
            | Error::Format(_)
            | Error::EmptySet
            | Error::Argument(_)
            | Error::Dimension(_)
            | Error::Validation(_)
            | Error::Config { .. }
            | Error::Csv(_)
            | Error::Json(_) => EXIT_VALIDATION,
            Error::Consistency(_) | Error::Backend { .. } | Error::Unavailable(_) => EXIT_INTERNAL,
        };
        Self::new(code, e.to_string())
    }
}
