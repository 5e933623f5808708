//! Command-line front end: configuration files, reports and the four
//! commands `check`, `solve`, `green` and `verify-paper`.

use std::path::PathBuf;

pub mod commands;
pub mod config;
pub mod expr;
pub mod output;
pub mod report;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    /// Malformed configuration, unreadable input or a numeric failure.
    pub const CONFIG: u8 = 1;
    /// The certificate for the requested mode does not pass.
    pub const CERTIFICATE: u8 = 2;
    /// Picard iteration exhausted its budget.
    pub const NOT_CONVERGED: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] fracbvp_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        exit::CONFIG
    }
}
