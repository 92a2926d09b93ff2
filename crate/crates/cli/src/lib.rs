//! Batch front-end for the `cholesteric-torque` binary: run configuration,
//! command implementations and output formatting.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use commands::{
    cmd_energy, cmd_fourier, cmd_oracle_check, cmd_sweep, cmd_torque_curve, fourier_table,
    CommandOutput,
};
pub use config::RunConfig;
pub use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] casimir_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("oracle check failed: {0}")]
    OracleFailed(String),

    #[error("{failed} of {total} sweep entries failed; first error: {first}")]
    SweepFailed {
        failed: usize,
        total: usize,
        first: Box<CliError>,
    },
}

impl CliError {
    /// 2 configuration, 3 convergence, 4 oracle check, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use casimir_core::Error as E;
        match self {
            CliError::Core(
                E::Io { .. } | E::Parse { .. } | E::Validation { .. } | E::Aliasing { .. },
            ) => 2,
            CliError::Core(E::Convergence { .. }) => 3,
            CliError::OracleFailed(_) => 4,
            CliError::SweepFailed { first, .. } => first.exit_code(),
            _ => 1,
        }
    }
}
