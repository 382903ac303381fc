//! Process exit codes and the error type that carries them.

use std::fmt;

use superquant::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Runtime = 1,
    Config = 2,
    Divergence = 3,
    Infeasible = 4,
    Verification = 5,
}

impl ExitCode {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ExitCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn config(message: String) -> Self {
        Self::new(ExitCode::Config, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => ExitCode::Divergence,
            Error::Infeasible { .. } => ExitCode::Infeasible,
            Error::InvalidArgument(_)
            | Error::NonPositiveMass(_)
            | Error::NoKineticTerm
            | Error::ModeMismatch { .. }
            | Error::TruncationLoss { .. }
            | Error::WordTooLong { .. }
            | Error::TooLarge { .. }
            | Error::NotADerivation(_) => ExitCode::Config,
            _ => ExitCode::Runtime,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ExitCode::Runtime, e.to_string())
    }
}
