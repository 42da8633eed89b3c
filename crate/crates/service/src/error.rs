use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::Value;

/// Error body: `{code, message, reasons}`.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub reasons: Vec<Value>,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    reasons: &'a [Value],
}

impl ApiError {
    pub fn new(
        status: StatusCode,
        code: &'static str,
        message: String,
        reasons: Vec<Value>,
    ) -> Self {
        ApiError {
            status,
            code,
            message,
            reasons,
        }
    }

    pub fn bad_request(message: String) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message, Vec::new())
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("no session `{id}`"),
            Vec::new(),
        )
    }

    /// A parse or validation failure; the message doubles as the only reason.
    pub fn invalid(code: &'static str, status: StatusCode, e: impl std::fmt::Display) -> Self {
        let message = e.to_string();
        let reasons = vec![serde_json::json!({ "message": message })];
        Self::new(status, code, message, reasons)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: self.code,
            message: &self.message,
            reasons: &self.reasons,
        };
        (self.status, Json(body)).into_response()
    }
}
