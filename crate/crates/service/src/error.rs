use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use tradeoff_core::{Error as CoreError, IngestError};

/// Structured error body: `{status, code, detail}` plus `line` for ingest
/// failures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            code: code.to_string(),
            detail: detail.into(),
            line: None,
        }
    }

    pub fn bad_request(code: &str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, detail)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "dataset_not_found",
            format!("no dataset with id {id:?}"),
        )
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY.as_u16(),
            code: e.kind.code().to_string(),
            detail: e.detail,
            line: e.line,
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        let detail = e.to_string();
        match e {
            CoreError::Infeasible(_) => Self::new(StatusCode::CONFLICT, "infeasible", detail),
            CoreError::ThresholdOutOfRange(_) => Self::bad_request("bad_threshold", detail),
            CoreError::TargetOutOfRange(_) => Self::bad_request("bad_target", detail),
            CoreError::UnsupportedObjective(_) => Self::bad_request("bad_objective", detail),
            CoreError::NoIcons => Self::bad_request("bad_icons", detail),
            CoreError::RecallUndefined | CoreError::FprUndefined => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "metric_undefined", detail)
            }
            CoreError::EmptyDataset | CoreError::EmptyCounts => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_input", detail)
            }
            CoreError::ScoreOutOfRange(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "bad_score_range", detail)
            }
            CoreError::InvalidConfig(_) => Self::bad_request("bad_request", detail),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
