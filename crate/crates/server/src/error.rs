use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::{json, Value};

use annotium::component::RegistryError;
use annotium::engine::EngineError;
use annotium::storage::StorageError;
use annotium::ModelError;

/// Every failure leaves the service as `{"error": ..., "detail": ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub error: String,
    pub detail: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, error: impl Into<String>, detail: impl Into<Value>) -> Self {
        ApiError {
            status,
            error: error.into(),
            detail: detail.into(),
        }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not found", what.into())
    }

    pub fn bad_request(detail: impl Into<Value>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad request", detail)
    }

    pub fn conflict(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", detail.into())
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal error", detail.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.error, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

impl From<StorageError> for ApiError {
    fn from(e: StorageError) -> Self {
        match &e {
            StorageError::Parse { path, message } => ApiError::new(
                StatusCode::BAD_REQUEST,
                "parse error",
                json!({ "path": path, "message": message }),
            ),
            StorageError::ValidationFailed(v) | StorageError::DocumentInvalid { violations: v, .. } => {
                ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "validation failed",
                    serde_json::to_value(v).unwrap_or_default(),
                )
            }
            StorageError::Io { .. } => ApiError::internal(e.to_string()),
            StorageError::MissingDocument(_) => ApiError::internal(e.to_string()),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NotFound(id) => ApiError::not_found(format!("annotation {id}")),
            other => ApiError::bad_request(other.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ValidationFailed { violations, .. } => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "validation failed",
                serde_json::to_value(&violations).unwrap_or_default(),
            ),
            EngineError::Registry(RegistryError::UnknownComponent(name)) => {
                ApiError::not_found(format!("component {name}"))
            }
            EngineError::PreconditionUnmet(missing) => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "validation failed",
                serde_json::to_value(&missing).unwrap_or_default(),
            ),
            e @ (EngineError::Params { .. } | EngineError::Registry(_)) => {
                ApiError::bad_request(e.to_string())
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
