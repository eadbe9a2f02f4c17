use thiserror::Error;

use crate::config::ConfigError;
use crate::curtailment::CurtailmentError;
use crate::enumeration::EnumerationError;
use crate::hazard::HazardError;
use crate::network::NetworkError;
use crate::reduction::ReductionError;
use crate::sizing::SizingError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Curtailment(#[from] CurtailmentError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error(transparent)]
    Sizing(#[from] SizingError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable name of the failing stage, for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Network(_) => "network",
            Error::Hazard(_) => "hazard",
            Error::Reduction(_) => "reduction",
            Error::Curtailment(_) => "curtailment",
            Error::Enumeration(EnumerationError::MatrixParse { .. }) => "parse",
            Error::Enumeration(_) => "enumeration",
            Error::Sizing(_) => "sizing",
            Error::Io { .. } => "io",
            Error::Pool(_) => "pool",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
