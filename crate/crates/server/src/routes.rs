use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use pupilclean_core::catalog::{FileAsset, FileId, FileKind, FileMeta, Study, StudyId, Subject, SubjectId};
use pupilclean_core::filters::{validate_chain, ChainDocument, ChainWarning, Severity};
use pupilclean_core::series::{AverageMode, AverageResponse, CacheStats, SeriesChannel, SeriesResponse};
use pupilclean_core::workers::{FileRef, Job, JobId, JobSpec, PoolStats};
use pupilclean_core::{Channel, ChannelSet, ColumnMapping};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::state::AppState;

pub const API_PREFIX: &str = "/api/v1";

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState, max_upload_bytes: usize) -> Router {
    let api = Router::new()
        .route("/studies", get(list_studies).post(create_study))
        .route("/studies/{study_id}", get(get_study))
        .route("/studies/{study_id}/subjects", get(list_subjects).post(create_subject))
        .route("/studies/{study_id}/subjects/import", post(import_subjects))
        .route("/subjects/{subject_id}/files", get(list_files))
        .route("/files", post(upload_file))
        .route("/files/{file_id}", get(get_file))
        .route("/files/{file_id}/series", get(get_series))
        .route("/files/{file_id}/average", get(get_average))
        .route("/jobs", get(list_jobs).post(submit_jobs))
        .route("/jobs/{job_id}", get(get_job))
        .route("/chains/validate", post(validate))
        .route("/pool", get(pool_status))
        .route("/cache", get(cache_status))
        .layer(DefaultBodyLimit::max(max_upload_bytes))
        .with_state(state);
    Router::new()
        .nest(API_PREFIX, api)
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
}

fn body<T>(json: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    json.map(|Json(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::bad_request(e.body_text()))
}

/// Runs catalog and decoding work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("request task failed: {e}")))?
}

#[derive(Deserialize)]
struct NewStudy {
    name: String,
}

async fn create_study(
    State(state): State<AppState>,
    req: Result<Json<NewStudy>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Study>)> {
    let req = body(req)?;
    let study = blocking(move || Ok(state.catalog.create_study(&req.name)?)).await?;
    Ok((StatusCode::CREATED, Json(study)))
}

async fn list_studies(State(state): State<AppState>) -> Json<Vec<Study>> {
    Json(state.catalog.list_studies())
}

async fn get_study(State(state): State<AppState>, Path(id): Path<StudyId>) -> ApiResult<Json<Study>> {
    Ok(Json(state.catalog.get_study(id)?))
}

#[derive(Deserialize)]
struct NewSubject {
    external_id: String,
    display_name: Option<String>,
}

async fn create_subject(
    State(state): State<AppState>,
    Path(study_id): Path<StudyId>,
    req: Result<Json<NewSubject>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Subject>)> {
    let req = body(req)?;
    let subject = blocking(move || {
        Ok(state
            .catalog
            .create_subject(study_id, &req.external_id, req.display_name.as_deref())?)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(subject)))
}

async fn list_subjects(State(state): State<AppState>, Path(study_id): Path<StudyId>) -> ApiResult<Json<Vec<Subject>>> {
    Ok(Json(state.catalog.list_subjects(study_id)?))
}

/// Body is the CSV text itself.
async fn import_subjects(
    State(state): State<AppState>,
    Path(study_id): Path<StudyId>,
    csv: axum::body::Bytes,
) -> ApiResult<(StatusCode, Json<Vec<Subject>>)> {
    let subjects = blocking(move || Ok(state.catalog.import_subjects(study_id, &csv)?)).await?;
    Ok((StatusCode::CREATED, Json(subjects)))
}

async fn list_files(State(state): State<AppState>, Path(subject_id): Path<SubjectId>) -> ApiResult<Json<Vec<FileAsset>>> {
    Ok(Json(state.catalog.list_files(subject_id)?))
}

async fn get_file(State(state): State<AppState>, Path(id): Path<FileId>) -> ApiResult<Json<FileAsset>> {
    Ok(Json(state.catalog.get_file(id)?))
}

#[derive(Serialize)]
struct Uploaded {
    file: FileAsset,
    /// Compression job queued for raw uploads.
    compression_job_id: Option<JobId>,
}

/// Multipart fields: `file` (required, with a file name), and optionally
/// `subject_id`, `sample_rate_hz`, `kind` and `mapping` (JSON).
async fn upload_file(
    State(state): State<AppState>,
    mut multipart: Multipart,
) -> ApiResult<(StatusCode, Json<Uploaded>)> {
    let bad = |e: axum::extract::multipart::MultipartError| ApiError::bad_request(e.body_text());
    let mut file: Option<(String, axum::body::Bytes)> = None;
    let mut subject_id: Option<SubjectId> = None;
    let mut meta = FileMeta::default();
    while let Some(field) = multipart.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        match name.as_str() {
            "file" => {
                let filename = field
                    .file_name()
                    .map(str::to_string)
                    .ok_or_else(|| ApiError::bad_request("the file part needs a file name"))?;
                file = Some((filename, field.bytes().await.map_err(bad)?));
            }
            "subject_id" => {
                let text = field.text().await.map_err(bad)?;
                subject_id = Some(text.trim().parse().map_err(|_| ApiError::bad_request("subject_id must be an integer"))?);
            }
            "sample_rate_hz" => {
                let text = field.text().await.map_err(bad)?;
                let rate: f64 = text.trim().parse().map_err(|_| ApiError::bad_request("sample_rate_hz must be a number"))?;
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(ApiError::bad_request("sample_rate_hz must be positive"));
                }
                meta.sample_rate_hz = Some(rate);
            }
            "kind" => {
                let text = field.text().await.map_err(bad)?;
                let kind: FileKind = serde_json::from_value(serde_json::Value::String(text.trim().to_string()))
                    .map_err(|_| ApiError::bad_request(format!("unknown file kind {text:?}")))?;
                meta.kind = Some(kind);
            }
            "mapping" => {
                let text = field.text().await.map_err(bad)?;
                let mapping: ColumnMapping =
                    serde_json::from_str(&text).map_err(|e| ApiError::bad_request(format!("invalid mapping: {e}")))?;
                mapping
                    .validate()
                    .map_err(|e| ApiError::bad_request(e.to_string()))?;
                meta.mapping = Some(mapping);
            }
            other => return Err(ApiError::bad_request(format!("unexpected field {other:?}"))),
        }
    }
    let (filename, bytes) = file.ok_or_else(|| ApiError::bad_request("missing file part"))?;
    let kind = meta.kind.unwrap_or_else(|| FileKind::from_filename(&filename));
    if kind == FileKind::Raw {
        meta.mapping.get_or_insert_with(|| (*state.mapping).clone());
        if meta.sample_rate_hz.is_none() {
            meta.sample_rate_hz = state.default_sample_rate_hz;
        }
    }
    let uploaded = blocking(move || {
        let file = state.catalog.register_file(&bytes, &filename, subject_id, meta)?;
        let compression_job_id = match file.kind {
            FileKind::Raw => Some(state.pool.submit(JobSpec::compress(FileRef::Asset(file.id)))?),
            _ => None,
        };
        Ok(Uploaded { file, compression_job_id })
    })
    .await?;
    Ok((StatusCode::CREATED, Json(uploaded)))
}

#[derive(Deserialize)]
struct SeriesQuery {
    channel: String,
    from_ms: Option<f64>,
    to_ms: Option<f64>,
    max_points: Option<usize>,
}

pub const DEFAULT_MAX_POINTS: usize = 2000;

async fn get_series(
    State(state): State<AppState>,
    Path(id): Path<FileId>,
    q: Result<Query<SeriesQuery>, QueryRejection>,
) -> ApiResult<Json<SeriesResponse>> {
    let q = query(q)?;
    let channel: SeriesChannel = q.channel.parse()?;
    let response = blocking(move || {
        Ok(state
            .series
            .series(id, channel, q.from_ms, q.to_ms, q.max_points.unwrap_or(DEFAULT_MAX_POINTS))?)
    })
    .await?;
    Ok(Json(response))
}

#[derive(Deserialize)]
struct AverageQuery {
    #[serde(default)]
    mode: AverageMode,
}

async fn get_average(
    State(state): State<AppState>,
    Path(id): Path<FileId>,
    q: Result<Query<AverageQuery>, QueryRejection>,
) -> ApiResult<Json<AverageResponse>> {
    let q = query(q)?;
    let response = blocking(move || Ok(state.series.average(id, q.mode)?)).await?;
    Ok(Json(response))
}

#[derive(Deserialize)]
struct JobRequest {
    file_ids: Vec<FileId>,
    chain: ChainDocument,
}

#[derive(Serialize)]
struct JobsCreated {
    job_ids: Vec<JobId>,
    /// Non-blocking findings about the chain.
    warnings: Vec<ChainWarning>,
}

/// Queues one cleaning job per file. Nothing is queued unless every file
/// exists and the chain has no errors.
async fn submit_jobs(
    State(state): State<AppState>,
    req: Result<Json<JobRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<JobsCreated>)> {
    let req = body(req)?;
    if req.file_ids.is_empty() {
        return Err(ApiError::bad_request("file_ids must not be empty"));
    }
    let findings = validate_chain(&req.chain.filters, ChannelSet::all());
    if findings.iter().any(|w| w.severity == Severity::Error) {
        return Err(ApiError::invalid_chain(findings));
    }
    let created = blocking(move || {
        for &id in &req.file_ids {
            let file = state.catalog.get_file(id)?;
            if matches!(file.kind, FileKind::Video | FileKind::Other) {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "not_a_series",
                    format!("file {id} is not a recording"),
                ));
            }
        }
        let job_ids = req
            .file_ids
            .iter()
            .map(|&id| state.pool.submit(JobSpec::clean(FileRef::Asset(id), req.chain.filters.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(JobsCreated { job_ids, warnings: findings })
    })
    .await?;
    Ok((StatusCode::ACCEPTED, Json(created)))
}

async fn get_job(State(state): State<AppState>, Path(id): Path<JobId>) -> ApiResult<Json<Job>> {
    if let Some(job) = state.pool.job(id) {
        return Ok(Json(job));
    }
    Ok(Json(state.catalog.get_job(id)?))
}

async fn list_jobs(State(state): State<AppState>) -> Json<Vec<Job>> {
    let mut jobs = state.catalog.list_jobs();
    for live in state.pool.jobs() {
        match jobs.iter_mut().find(|j| j.id == live.id) {
            Some(j) => *j = live,
            None => jobs.push(live),
        }
    }
    jobs.sort_by_key(|j| j.id);
    Json(jobs)
}

#[derive(Deserialize)]
struct ValidateRequest {
    #[serde(flatten)]
    chain: ChainDocument,
    /// Channels the target data carries; all four when absent.
    channels: Option<Vec<Channel>>,
}

#[derive(Serialize)]
struct ValidateResponse {
    valid: bool,
    warnings: Vec<ChainWarning>,
}

async fn validate(req: Result<Json<ValidateRequest>, JsonRejection>) -> ApiResult<Json<ValidateResponse>> {
    let req = body(req)?;
    let channels = req
        .channels
        .map_or_else(ChannelSet::all, |list| list.into_iter().collect());
    let warnings = validate_chain(&req.chain.filters, channels);
    Ok(Json(ValidateResponse {
        valid: !warnings.iter().any(|w| w.severity == Severity::Error),
        warnings,
    }))
}

async fn pool_status(State(state): State<AppState>) -> Json<PoolStats> {
    Json(state.pool.stats())
}

async fn cache_status(State(state): State<AppState>) -> Json<CacheStats> {
    Json(state.series.cache_stats())
}
