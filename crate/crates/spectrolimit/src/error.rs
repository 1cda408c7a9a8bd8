use std::io;

use serde_json::json;
use spectrolimit_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Compute(#[from] CoreError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("sweep spec: {0}")]
    Sweep(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{failed} of {total} sweep points failed")]
    PartialFailure { failed: usize, total: usize },
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Compute(e) => e.kind(),
            CliError::Config(_) => "ConfigError",
            CliError::Sweep(_) => "SweepSpecError",
            CliError::Io(_) => "IoError",
            CliError::Csv(_) => "IoError",
            CliError::PartialFailure { .. } => "PartialFailure",
        }
    }

    /// 1 for compute and IO failures, 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Sweep(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "status": "error", "kind": self.kind(), "message": self.to_string() }).to_string()
    }
}
