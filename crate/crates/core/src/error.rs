use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge (achieved error estimate {achieved:e})")]
    NonConvergence { what: &'static str, achieved: f64 },

    #[error("no sign change while solving {0}")]
    NonBracketing(&'static str),

    #[error("window radius {window} too small: need at least {required}")]
    WindowTooSmall { window: f64, required: f64 },

    #[error("cell containment failed after {expansions} window expansions (last window {window})")]
    Containment { expansions: usize, window: f64 },

    #[error("budget too small: {0}")]
    Budget(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
