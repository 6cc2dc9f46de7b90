use pwm_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum PwmError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("symmetrization annihilated the function for every candidate shift")]
    AnnihilatedSymmetrization,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PwmError>;

pub(crate) fn coarse(msg: impl Into<String>) -> PwmError {
    PwmError::GridTooCoarse(msg.into())
}
