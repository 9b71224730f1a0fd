//! Command-line front end: TOML configs in, CSV tables and JSON sidecars out.

pub mod commands;
pub mod config;
pub mod presets;

pub use commands::{run, Command, Outcome};
pub use config::RunConfig;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// Single line for stderr, e.g. `error kind=config exit=2 message="..."`.
    pub fn line(&self) -> String {
        let msg = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"\"".into());
        format!("error kind={} exit={} message={msg}", self.kind(), self.exit_code())
    }
}

impl From<trapnoise::Error> for CliError {
    fn from(e: trapnoise::Error) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}
