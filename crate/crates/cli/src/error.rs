use std::path::PathBuf;

use sdm_core::SdmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation failed: {0}")]
    Tolerance(String),

    #[error("{0}")]
    Core(#[from] SdmError),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for bad input, 2 for a tolerance failure, 3 for a truncation or
    /// audit failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Tolerance(_) => 2,
            CliError::Core(e) => match e {
                SdmError::InvalidParams { .. }
                | SdmError::DegenerateParams(_)
                | SdmError::Domain(_)
                | SdmError::OverflowGuard(_)
                | SdmError::DegenerateOutcome(_) => 1,
                SdmError::Truncation(_)
                | SdmError::NonReal(_)
                | SdmError::StepFailure { .. }
                | SdmError::NegativePhaseDensity(_)
                | SdmError::NotConverged(_) => 3,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
