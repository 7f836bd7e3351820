//! File formats, parallel drivers and the `priorest` command line on top of
//! `priorest-core`.

pub mod cli;
pub mod csv;
pub mod fixtures;
pub mod parallel;
pub mod schema;

use priorest_core::Error;

/// Errors surfaced to the command line, with their exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core { context: String, source: Error },

    #[error("schema: {0}")]
    Schema(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn core(context: impl Into<String>, source: Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    /// 3 for solver failures, 2 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core {
                source: Error::Solver(_),
                ..
            } => 3,
            _ => 2,
        }
    }
}
