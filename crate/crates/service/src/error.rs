use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Error body: `{"error": {"code", "message"}}`, with `new_session` set
/// when an unknown session was replaced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDetail {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub new_session: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub detail: ErrorDetail,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: &str) -> Self {
        Self {
            status,
            detail: ErrorDetail {
                code,
                message: message.to_string(),
                new_session: None,
            },
        }
    }

    pub fn invalid(message: &str) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }

    pub fn bad_body(message: &str) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn unknown_model(message: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_model", message)
    }

    pub fn unknown_session(old: &str, fresh: String) -> Self {
        let mut e = Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            &format!("session {old:?} does not exist; a new session was created"),
        );
        e.detail.new_session = Some(fresh);
        e
    }

    pub fn internal(message: &str) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

#[derive(Serialize)]
struct Envelope<'a> {
    error: &'a ErrorDetail,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(Envelope { error: &self.detail })).into_response()
    }
}
