//! Error classes and process exit codes.

use std::fmt;
use std::process::ExitCode;

use refscore::ErrorClass;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub class: ErrorClass,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Config, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Data, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self { class: ErrorClass::Runtime, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.class {
            ErrorClass::Config => EXIT_CONFIG,
            ErrorClass::Data => EXIT_DATA,
            ErrorClass::Runtime => EXIT_RUNTIME,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.class {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Runtime => "runtime",
        };
        write!(f, "{class} error: {}", self.message)
    }
}

impl From<refscore::Error> for CliError {
    fn from(e: refscore::Error) -> Self {
        Self { class: e.class(), message: e.to_string() }
    }
}
