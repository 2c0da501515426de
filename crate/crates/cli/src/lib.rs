//! Scenario files, presets and the experiment runners behind the `exciton`
//! binary.

pub mod commands;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod verify;

use std::path::{Path, PathBuf};

use exciton_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("scenario '{scenario}': {source}")]
    Scenario { scenario: String, source: Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("scenario '{scenario}': dt = {dt} is not converged (relative difference {rel_diff:.3e} vs dt/2)")]
    NotConverged { scenario: String, dt: f64, rel_diff: f64 },
    #[error("{failures} verification check(s) failed")]
    VerifyFailed { failures: usize },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::Scenario { source: e, .. } if e.is_divergence() => EXIT_DIVERGENCE,
            CliError::Core(_) | CliError::Scenario { .. } => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::NotConverged { .. } | CliError::VerifyFailed { .. } => EXIT_VERIFY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(Error::config("x", "y")).exit_code(), EXIT_CONFIG);
        assert_eq!(
            CliError::Core(Error::IntegrationDiverged { t: 1.0 }).exit_code(),
            EXIT_DIVERGENCE
        );
        let tagged = Error::Restart {
            restart: 2,
            source: Box::new(Error::IntegrationDiverged { t: 0.5 }),
        };
        assert_eq!(CliError::Core(tagged).exit_code(), EXIT_DIVERGENCE);
        assert_eq!(CliError::VerifyFailed { failures: 1 }.exit_code(), EXIT_VERIFY);
    }
}
