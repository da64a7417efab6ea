use thiserror::Error;

/// Errors raised by the library.
///
/// `Validation` covers malformed inputs (bad indices, wrong dimensions,
/// out-of-range parameters). `Runtime` covers failures that happen while
/// computing on valid inputs, such as an optimizer producing a non-finite loss.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("fit diverged for coordinate {coordinate:?} at iteration {iteration}: loss is not finite")]
    FitDiverged {
        coordinate: Option<usize>,
        iteration: usize,
    },

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True when the error stems from bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Format(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err($crate::error::Error::Validation(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
