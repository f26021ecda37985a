use std::fmt;

pub const SUCCESS: i32 = 0;
pub const USAGE: i32 = 2;
pub const FORMAT: i32 = 3;
pub const NUMERICAL: i32 = 4;

/// A check that ran to completion and failed (self-test, tolerance, replay).
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

/// Bad flag combinations that clap cannot express.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Maps an error chain to the process exit status.
pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<CheckFailed>() {
            return NUMERICAL;
        }
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<scatsynth::Error>() {
            return if e.is_numerical() {
                NUMERICAL
            } else if e.is_format() || matches!(e, scatsynth::Error::Io(_) | scatsynth::Error::Image(_)) {
                FORMAT
            } else {
                USAGE
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return FORMAT;
        }
    }
    NUMERICAL
}
