use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Calibration(String),

    #[error("{0}")]
    Runtime(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Calibration(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    pub(crate) fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot read {}: {err}", path.display()))
    }

    pub(crate) fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<qfsim_core::Error> for CliError {
    fn from(e: qfsim_core::Error) -> Self {
        use qfsim_core::Error as E;
        match e {
            E::Config(_) | E::Program(_) => CliError::Config(e.to_string()),
            E::Calibration(_) | E::Training(_) => CliError::Calibration(e.to_string()),
            E::Domain(_) | E::RateMismatch { .. } | E::TooShort { .. } => CliError::Runtime(e.to_string()),
        }
    }
}
