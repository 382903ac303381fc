//! Command-line front end for `superquant`: scenario configs, runs,
//! verification reports and sweeps.

pub mod app;
pub mod config;
pub mod exit;
pub mod run;
pub mod sweep;

pub use exit::{CliError, ExitCode};
