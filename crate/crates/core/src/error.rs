use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("dataset error: row {row} has no list marked; cases on no list cannot be observed")]
    UnobservedRow { row: usize },

    #[error("model space would contain more than {limit} models")]
    SafetyLimit { limit: usize },

    #[error("no estimable model found: {0}")]
    NoModelFound(String),

    #[error("every replicate was excluded: {0}")]
    AllReplicatesExcluded(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::InvalidModel(_) => "invalid_model",
            Error::Dataset(_) => "dataset",
            Error::UnobservedRow { .. } => "unobserved_row",
            Error::SafetyLimit { .. } => "safety_limit",
            Error::NoModelFound(_) => "no_model_found",
            Error::AllReplicatesExcluded(_) => "all_replicates_excluded",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
