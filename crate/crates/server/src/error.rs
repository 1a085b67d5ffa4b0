use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ideaspan_core::providers::ProviderError;
use ideaspan_core::{EngineError, SessionError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Validation,
    NotFound,
    InvalidState,
    Provider,
    PoolExhausted,
    Format,
}

/// Error body returned by every endpoint and printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub retryable: bool,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            retryable: false,
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn status(&self) -> StatusCode {
        match self.code {
            ErrorCode::Validation | ErrorCode::Format => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::InvalidState | ErrorCode::PoolExhausted => StatusCode::CONFLICT,
            ErrorCode::Provider => StatusCode::BAD_GATEWAY,
        }
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let code = serde_json::to_value(self.code).ok();
        let code = code.as_ref().and_then(|v| v.as_str()).unwrap_or("error");
        write!(f, "{code}: {}", self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::Validation(_) => ErrorCode::Validation,
            SessionError::NotFound(_) => ErrorCode::NotFound,
            SessionError::InvalidState(_) => ErrorCode::InvalidState,
            SessionError::PoolExhausted { .. } => ErrorCode::PoolExhausted,
            SessionError::UnsupportedSchema(_) | SessionError::Corrupt(_) => ErrorCode::Format,
            SessionError::Io(io) if io.kind() == std::io::ErrorKind::NotFound => ErrorCode::NotFound,
            SessionError::Io(_) => {
                return Self {
                    code: ErrorCode::InvalidState,
                    message: e.to_string(),
                    retryable: true,
                }
            }
        };
        Self::new(code, e.to_string())
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Validation(_) => Self::validation(e.to_string()),
            _ => Self {
                code: ErrorCode::Provider,
                retryable: e.is_transient() || matches!(e, ProviderError::PartialResult { .. }),
                message: e.to_string(),
            },
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::InvalidRequest(_) => Self::validation(e.to_string()),
            EngineError::PoolExhausted => Self::new(ErrorCode::PoolExhausted, e.to_string()),
            // The model answered but nothing in it parsed as a candidate.
            EngineError::EmptyPool => Self {
                code: ErrorCode::Provider,
                message: e.to_string(),
                retryable: true,
            },
            EngineError::Provider(p) => p.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}
