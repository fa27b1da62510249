use std::fmt;

use phfock::FockError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const SCHEMA: u8 = 2;
    pub const RESOURCE: u8 = 3;
    pub const INADMISSIBLE: u8 = 4;
    pub const FAILURE: u8 = 5;
}

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: String) -> Self {
        Self { code, message }
    }

    pub fn schema(message: String) -> Self {
        Self::new(exit::SCHEMA, message)
    }

    pub fn failure(message: String) -> Self {
        Self::new(exit::FAILURE, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub fn code_for(e: &FockError) -> u8 {
    match e {
        FockError::Schema(_) | FockError::InvalidParameter(_) | FockError::DimensionMismatch { .. } => exit::SCHEMA,
        FockError::ResourceLimit(_) => exit::RESOURCE,
        FockError::Inadmissible(_) => exit::INADMISSIBLE,
        FockError::Entry { source, .. } => code_for(source),
        _ => exit::FAILURE,
    }
}

impl From<FockError> for CliError {
    fn from(e: FockError) -> Self {
        Self::new(code_for(&e), e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::failure(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::failure(format!("json: {e}"))
    }
}
