use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient precision: need coefficients down to T^{needed}, have T^{available}")]
    Precision { needed: i64, available: i64 },
    #[error("budget exceeded: {what} needs {needed} steps, cap is {cap}")]
    Budget { what: String, needed: u128, cap: u128 },
    #[error("check failed: {0}")]
    Assertion(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn assertion(msg: impl Into<String>) -> Self {
        Error::Assertion(msg.into())
    }

    /// Process exit code for the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Assertion(_) => 2,
            Error::Budget { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Fails with `Error::Assertion` when `cond` is false.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Assertion(msg()))
    }
}
