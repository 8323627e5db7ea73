use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use dataprep_core::cleaner::Violation;
use dataprep_core::pipeline::{PipelineError, RunReport};
use dataprep_core::tabular::TabularError;
use serde_json::{json, Value};
use thiserror::Error;

/// Every failure the API reports. Responses carry a JSON body with the
/// variant name under `error`, the display text under `message`, and any
/// structured details.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` expired")]
    SessionExpired(String),
    #[error("upload exceeds the limit of {limit} bytes")]
    FileTooLarge { limit: usize },
    #[error("{message}")]
    Parse {
        message: String,
        row: Option<usize>,
        line: Option<u64>,
    },
    #[error("snapshot is at version {current}, request was made against {given}")]
    StaleVersion { current: u64, given: u64 },
    #[error("row ids not in the current snapshot: {0:?}")]
    IndexOutOfRange(Vec<usize>),
    #[error("column `{0}` is not numeric")]
    NonNumericAxis(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unknown step `{0}`")]
    UnknownStep(String),
    #[error("step `{step}`: {reason}")]
    InvalidEdit { step: String, reason: String },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("no export for the current plan; finalize first")]
    NotFinalized,
    #[error("{} constraint violation(s) remain after repair", violations.len())]
    ConstraintViolation {
        violations: Vec<Violation>,
        report: Box<RunReport>,
    },
    #[error("step `{step}` failed: {message}")]
    StepFailed { step: String, message: String },
    #[error("{0}")]
    BadRequest(String),
    #[error("not found")]
    NotFound,
    #[error(transparent)]
    Engine(PipelineError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Tabular(t) => t.into(),
            PipelineError::ConstraintViolationAfterRepair { violations, partial } => ApiError::ConstraintViolation {
                violations,
                report: partial,
            },
            PipelineError::StepFailed { step, message, .. } => ApiError::StepFailed { step, message },
            PipelineError::Format { .. } | PipelineError::UnsupportedVersion { .. } => {
                ApiError::BadRequest(e.to_string())
            }
            e => ApiError::Engine(e),
        }
    }
}

impl From<TabularError> for ApiError {
    fn from(e: TabularError) -> Self {
        let message = e.to_string();
        match e {
            TabularError::MalformedCsv { row, line, .. } => ApiError::Parse {
                message,
                row: Some(row),
                line: Some(line),
            },
            TabularError::CsvSyntax { line, .. } => ApiError::Parse {
                message,
                row: None,
                line: Some(line),
            },
            TabularError::EmptyInput | TabularError::InvalidUtf8 { .. } | TabularError::DuplicateHeader(_) => {
                ApiError::Parse {
                    message,
                    row: None,
                    line: None,
                }
            }
            TabularError::UnknownColumn(c) => ApiError::UnknownColumn(c),
            e => ApiError::Engine(PipelineError::Tabular(e)),
        }
    }
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::UnknownSession(_) => "UnknownSession",
            ApiError::SessionExpired(_) => "SessionExpired",
            ApiError::FileTooLarge { .. } => "FileTooLarge",
            ApiError::Parse { .. } => "ParseError",
            ApiError::StaleVersion { .. } => "StaleVersion",
            ApiError::IndexOutOfRange(_) => "IndexOutOfRange",
            ApiError::NonNumericAxis(_) => "NonNumericAxis",
            ApiError::UnknownColumn(_) => "UnknownColumn",
            ApiError::UnknownStep(_) => "UnknownStep",
            ApiError::InvalidEdit { .. } => "InvalidEdit",
            ApiError::NothingToUndo => "NothingToUndo",
            ApiError::NotFinalized => "NotFinalized",
            ApiError::ConstraintViolation { .. } => "ConstraintViolationAfterRepair",
            ApiError::StepFailed { .. } => "StepFailed",
            ApiError::BadRequest(_) => "BadRequest",
            ApiError::NotFound => "NotFound",
            ApiError::Engine(_) => "EngineError",
            ApiError::Internal(_) => "Internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::UnknownSession(_) | ApiError::UnknownStep(_) | ApiError::NotFinalized | ApiError::NotFound => {
                StatusCode::NOT_FOUND
            }
            ApiError::SessionExpired(_) => StatusCode::GONE,
            ApiError::FileTooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::StaleVersion { .. } | ApiError::NothingToUndo | ApiError::ConstraintViolation { .. } => {
                StatusCode::CONFLICT
            }
            ApiError::StepFailed { .. } | ApiError::Engine(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
            ApiError::Parse { .. }
            | ApiError::IndexOutOfRange(_)
            | ApiError::NonNumericAxis(_)
            | ApiError::UnknownColumn(_)
            | ApiError::InvalidEdit { .. }
            | ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
        }
    }

    fn details(&self) -> Value {
        match self {
            ApiError::FileTooLarge { limit } => json!({ "limit": limit }),
            ApiError::Parse { row, line, .. } => json!({ "row": row, "line": line }),
            ApiError::StaleVersion { current, given } => json!({ "current": current, "given": given }),
            ApiError::IndexOutOfRange(ids) => json!({ "row_ids": ids }),
            ApiError::NonNumericAxis(c) | ApiError::UnknownColumn(c) => json!({ "column": c }),
            ApiError::UnknownStep(s) => json!({ "step": s }),
            ApiError::InvalidEdit { step, reason } => json!({ "step": step, "reason": reason }),
            ApiError::ConstraintViolation { violations, report } => {
                json!({ "violations": violations, "report": report })
            }
            ApiError::StepFailed { step, .. } => json!({ "step": step }),
            _ => json!({}),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = self.details();
        body["error"] = json!(self.code());
        body["message"] = json!(self.to_string());
        (self.status(), Json(body)).into_response()
    }
}
