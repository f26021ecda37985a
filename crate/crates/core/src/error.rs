use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("frame condition fails: epsilon = {epsilon} (must be < 1)")]
    FrameFailure { epsilon: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("log-frequency grid mismatch: bank has {expected} positions, scalogram has {actual} bands")]
    GridMismatch { expected: usize, actual: usize },

    #[error("descriptor configuration digest mismatch: {left} vs {right}")]
    DigestMismatch { left: String, right: String },

    #[error("dense Jacobian would have {rows} rows, cap is {cap}")]
    CapExceeded { rows: usize, cap: usize },

    #[error("non-finite iterate at iteration {iteration}; reduce the gradient step")]
    NonFiniteIterate { iteration: usize },

    #[error("damped normal equations are not solvable even at damping {damping}")]
    SingularSystem { damping: f64 },

    #[error("no decrease after {retries} damping increases (damping {damping})")]
    RetryExhausted { retries: usize, damping: f64 },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    /// True for errors caused by malformed or incompatible input files.
    pub fn is_format(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedFormat(_)
                | Error::Json(_)
                | Error::Wav(_)
                | Error::DigestMismatch { .. }
                | Error::LengthMismatch { .. }
                | Error::GridMismatch { .. }
        )
    }

    /// True for failures of the numerical machinery itself.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::FrameFailure { .. }
                | Error::NonFiniteIterate { .. }
                | Error::SingularSystem { .. }
                | Error::RetryExhausted { .. }
                | Error::CapExceeded { .. }
        )
    }
}
