use std::fmt;

use annotium::component::{RegistryError, ScaffoldError};
use annotium::engine::EngineError;
use annotium::storage::StorageError;
use annotium::ModelError;

/// Exit status contract: 0 success, 1 user error, 2 processing failure,
/// 3 I/O failure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    User = 1,
    Processing = 2,
    Io = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
    /// Structured detail for `--json` output.
    pub detail: Option<serde_json::Value>,
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::User,
            message: message.into(),
            detail: None,
        }
    }

    pub fn processing(message: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Processing,
            message: message.into(),
            detail: None,
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError {
            kind: ExitKind::Io,
            message: message.into(),
            detail: None,
        }
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }

    pub fn code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<StorageError> for CliError {
    fn from(e: StorageError) -> Self {
        let message = e.to_string();
        match e {
            StorageError::Io { .. } => CliError::io(message),
            StorageError::MissingDocument(_) => CliError::io(message),
            StorageError::InvalidDocumentId(_) => CliError::user(message),
            StorageError::ValidationFailed(v) | StorageError::DocumentInvalid { violations: v, .. } => {
                CliError::processing(message).with_detail(serde_json::to_value(v).unwrap_or_default())
            }
            _ => CliError::processing(message),
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::ValidationFailed { violations, .. } => {
                CliError::user(message).with_detail(serde_json::to_value(violations).unwrap_or_default())
            }
            EngineError::Registry(_) | EngineError::Params { .. } | EngineError::PreconditionUnmet(_) => {
                CliError::user(message)
            }
            _ => CliError::processing(message),
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::user(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::user(e.to_string())
    }
}

impl From<ScaffoldError> for CliError {
    fn from(e: ScaffoldError) -> Self {
        match e {
            ScaffoldError::Io { .. } => CliError::io(e.to_string()),
            _ => CliError::user(e.to_string()),
        }
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
