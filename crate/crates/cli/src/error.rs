use std::process::ExitCode;

use qrel_core::estimation::EstimationError;
use qrel_core::io::FormatError;
use qrel_core::simulator::SimError;
use thiserror::Error;

/// Exit statuses. Usage errors keep clap's status 2.
pub mod status {
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const MISSING_DATA: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        let code = match self {
            CliError::Format(
                FormatError::Io { .. } | FormatError::Write(_) | FormatError::Csv(_),
            ) => status::IO,
            CliError::Format(_) => status::PARSE,
            CliError::Estimation(e) => match e {
                EstimationError::InfeasibleModel { .. } => status::INFEASIBLE,
                EstimationError::EmptyGroup { .. } | EstimationError::MissingProbability(_) => {
                    status::MISSING_DATA
                }
                _ => status::PARSE,
            },
            CliError::Sim(_) | CliError::Usage(_) => status::USAGE,
            CliError::Io { .. } => status::IO,
        };
        ExitCode::from(code)
    }
}
