use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated the documented precondition of an operation.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("infeasible training: {pilots_per_source} pilot symbols per source (need at least 1)")]
    InfeasibleTraining { pilots_per_source: f64 },

    #[error("power split undefined for sharing factor {alpha} (denominator vanishes)")]
    DegenerateSharingFactor { alpha: f64 },

    /// Desired effective channel `u* H v` is zero so no power can reach the target.
    #[error("infeasible link for user {user}: zero effective channel gain")]
    InfeasibleLink { user: usize },

    #[error("malformed CSI code: {0}")]
    Decode(String),

    #[error("mismatched drop lists: {0}")]
    MismatchedDrops(String),

    /// Configuration value out of range; `field` is the dotted path of the offending key.
    #[error("{field}: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}
