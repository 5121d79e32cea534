use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::error::Error;
use crate::validate::Violation;

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub violations: Vec<Violation>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into(), violations: Vec::new() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownStudy(_) | Error::UnknownReview(_) => StatusCode::NOT_FOUND,
            Error::MatrixAbsent(_) => StatusCode::CONFLICT,
            Error::InvalidFilter(_)
            | Error::UnknownCriterion(_)
            | Error::UnknownColumn(_)
            | Error::Validation(_)
            | Error::Header { .. }
            | Error::Csv(_)
            | Error::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let violations = match &e {
            Error::Validation(v) => v.clone(),
            _ => Vec::new(),
        };
        ApiError { status, message: e.to_string(), violations }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message });
        if !self.violations.is_empty() {
            body["violations"] = json!(self.violations);
        }
        (self.status, Json(body)).into_response()
    }
}
