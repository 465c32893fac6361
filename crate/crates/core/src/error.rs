use thiserror::Error;

/// Errors raised while loading or validating a model description.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("{entry}: {reason}")]
    Invalid { entry: String, reason: String },
    #[error("bad override `{0}`: {1}")]
    Override(String, String),
}

impl ConfigError {
    pub fn invalid(entry: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            entry: entry.into(),
            reason: reason.into(),
        }
    }
}

/// Errors raised by simulation routines.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("threshold violated: {0}")]
    Threshold(String),
    #[error("negative branch weight {weight:e} in {context}")]
    NegativeWeight { weight: f64, context: String },
    #[error("state lost normalisation: {0}")]
    Normalisation(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("plan does not fit: {0}")]
    Plan(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
