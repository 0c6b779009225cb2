use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use pupilclean_core::catalog::CatalogError;
use pupilclean_core::filters::ChainWarning;
use pupilclean_core::series::SeriesError;
use pupilclean_core::workers::WorkerError;
use serde_json::json;

/// Error response: `{"error": {"code": ..., "message": ...}}`, plus the
/// offending findings for chain errors.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub warnings: Option<Vec<ChainWarning>>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
            warnings: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal_error", message)
    }

    pub fn invalid_chain(warnings: Vec<ChainWarning>) -> ApiError {
        let message = warnings
            .iter()
            .map(|w| w.message.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        ApiError {
            warnings: Some(warnings),
            ..ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_chain", message)
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(w) = self.warnings {
            error["warnings"] = json!(w);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

impl From<CatalogError> for ApiError {
    fn from(e: CatalogError) -> Self {
        use CatalogError::*;
        let (status, code) = match &e {
            Io(_) | Corrupt { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "storage_error"),
            EmptyStudyName | EmptySubjectId => (StatusCode::BAD_REQUEST, "invalid_request"),
            DuplicateStudy(_) => (StatusCode::CONFLICT, "duplicate_study"),
            DuplicateSubject(_) => (StatusCode::CONFLICT, "duplicate_subject"),
            UnknownStudy(_) => (StatusCode::NOT_FOUND, "study_not_found"),
            UnknownSubject(_) => (StatusCode::NOT_FOUND, "subject_not_found"),
            UnmappedFilename(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unmapped_filename"),
            UnknownFile(_) => (StatusCode::NOT_FOUND, "file_not_found"),
            UnknownJob(_) => (StatusCode::NOT_FOUND, "job_not_found"),
            HasDependents(_) => (StatusCode::CONFLICT, "has_dependents"),
            Ingest(_) => (StatusCode::BAD_REQUEST, "invalid_csv"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<SeriesError> for ApiError {
    fn from(e: SeriesError) -> Self {
        use SeriesError::*;
        let (status, code) = match &e {
            UnknownChannel(_) | InvalidMaxPoints(_) | InvalidWindow { .. } => {
                (StatusCode::BAD_REQUEST, "invalid_request")
            }
            ChannelNotCarried(_) => (StatusCode::UNPROCESSABLE_ENTITY, "channel_not_carried"),
            EmptyWindow => (StatusCode::UNPROCESSABLE_ENTITY, "empty_window"),
            NoPupilData => (StatusCode::UNPROCESSABLE_ENTITY, "no_qualifying_samples"),
            UnknownFile(_) => (StatusCode::NOT_FOUND, "file_not_found"),
            InspectionUnavailable(_) => (StatusCode::CONFLICT, "inspection_unavailable"),
            NotASeries(_) => (StatusCode::UNPROCESSABLE_ENTITY, "not_a_series"),
            Decode { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "decode_error"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<WorkerError> for ApiError {
    fn from(e: WorkerError) -> Self {
        match e {
            WorkerError::InvalidChain(w) => ApiError::invalid_chain(w),
            WorkerError::UnknownInput(m) => ApiError::new(StatusCode::NOT_FOUND, "file_not_found", m),
            WorkerError::UnknownJob(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "job_not_found", format!("unknown job {id}"))
            }
            WorkerError::NotQueued(_) => ApiError::new(StatusCode::CONFLICT, "job_not_queued", e.to_string()),
            WorkerError::NoCores | WorkerError::ShuttingDown => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "pool_unavailable", e.to_string())
            }
        }
    }
}
