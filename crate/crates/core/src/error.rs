use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parity violation: {0}")]
    Parity(String),

    #[error("rate function is not elliptic: inf w = {inf} at u = {at}")]
    NotElliptic { inf: f64, at: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("integral did not converge: {0}")]
    NotConverged(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("moment blow-up: {0}")]
    MomentBlowUp(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("dimension budget exceeded: {0}")]
    Budget(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
