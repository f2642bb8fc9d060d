use thiserror::Error;

use crate::io::IoError;

/// Errors surfaced by the command layer, split by exit code.
#[derive(Debug, Error)]
pub enum ToolError {
    /// Bad flags, config, or input content.
    #[error("{0}")]
    Invalid(String),
    /// Failures while doing the work: output IO, transport, training.
    #[error("{0}")]
    Runtime(String),
}

impl ToolError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) => 1,
            Self::Runtime(_) => 2,
        }
    }

    pub fn invalid(e: impl ToString) -> Self {
        Self::Invalid(e.to_string())
    }

    pub fn runtime(e: impl ToString) -> Self {
        Self::Runtime(e.to_string())
    }
}

/// Output-side IO failures are runtime errors.
impl From<IoError> for ToolError {
    fn from(e: IoError) -> Self {
        Self::Runtime(e.to_string())
    }
}
