use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {field}: {message}")]
    Config { field: String, message: String },

    #[error("integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },

    #[error("optimizer diverged at iteration {iteration}{}", restart.map(|r| format!(" (restart {r})")).unwrap_or_default())]
    OptimizerDiverged { iteration: usize, restart: Option<usize> },

    #[error("restart {restart}: {source}")]
    Restart {
        restart: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("full-space dimension {dimension} exceeds cap {cap}")]
    DimensionOverflow { dimension: usize, cap: usize },
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by the numerics rather than the inputs.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::IntegrationDiverged { .. } | Error::OptimizerDiverged { .. } => true,
            Error::Restart { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}
