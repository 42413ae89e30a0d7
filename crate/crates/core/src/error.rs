use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Non-manifold or otherwise broken mesh combinatorics.
    #[error("structural error: {message}")]
    Structural {
        message: String,
        /// Offending simplices (vertex or face indices), when known.
        offenders: Vec<usize>,
    },

    /// A resource guard tripped (e.g. refinement level too large).
    #[error("resource limit: {0}")]
    Resource(String),

    /// Numerical failure: overflow, solver breakdown, non-convergence.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A certification check failed.
    #[error("certification failure: {0}")]
    Certification(String),

    /// Invalid argument for the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Bad run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn structural(message: impl Into<String>) -> Self {
        Error::Structural {
            message: message.into(),
            offenders: Vec::new(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
