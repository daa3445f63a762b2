//! Reproducible experiments on beam-equation solitons: configuration,
//! snapshot persistence and the subcommand drivers behind `beam-soliton`.

pub mod commands;
pub mod config;
pub mod snapshot;

use beam_soliton::evolution::EvolutionError;
use thiserror::Error;

pub use config::RunConfig;
pub use snapshot::ProfileSnapshot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("snapshot error: {0}")]
    Load(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("numerical instability at t = {time:.6e} (max |u|, |v| = {max_abs:.3e})")]
    Instability { time: f64, max_abs: f64 },
}

impl CliError {
    /// 1 for certificate or assumption failures, 2 for usage, config and
    /// load errors, 3 for numerical blow-up.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Certificate(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Load(_) | CliError::Io(_) => 2,
            CliError::Instability { .. } => 3,
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        match e {
            EvolutionError::Instability { time, max_abs } => CliError::Instability { time, max_abs },
            other => CliError::Usage(other.to_string()),
        }
    }
}
