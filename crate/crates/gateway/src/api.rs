//! HTTP routes.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use stacksim::design::{Design, DesignDocument, Violation};
use tokio::sync::Mutex;

use crate::jobs::JobManager;
use crate::output::RunOutput;
use crate::store::{now, DesignRecord, JobKind, JobRecord, JobState, Store};

pub struct AppState {
    pub jobs: Arc<JobManager>,
    /// Serializes design writes so revision checks are atomic.
    designs: Mutex<()>,
}

impl AppState {
    pub fn new(jobs: Arc<JobManager>) -> Arc<AppState> {
        Arc::new(AppState { jobs, designs: Mutex::new(()) })
    }

    fn store(&self) -> &Store {
        self.jobs.store()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, format!("{what} '{id}' not found"))
    }

    fn invalid(violations: Vec<Violation>) -> Self {
        let messages: Vec<String> = violations.iter().map(ToString::to_string).collect();
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": "design is invalid", "violations": violations, "messages": messages }),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/designs", post(create_design))
        .route("/designs/{id}", get(get_design).put(update_design))
        .route("/designs/{id}/jobs", post(submit_job))
        .route("/jobs/{id}", get(get_job))
        .route("/jobs/{id}/summary", get(job_summary))
        .route("/jobs/{id}/heatmap", get(job_heatmap))
        .route("/jobs/{id}/ranking", get(job_ranking))
        .route("/jobs/{id}/artifacts/{name}", get(job_artifact))
        .with_state(state)
}

fn load_design(state: &AppState, id: &str) -> ApiResult<DesignRecord> {
    state.store().design(id).map_err(ApiError::internal)?.ok_or_else(|| ApiError::not_found("design", id))
}

async fn create_design(
    State(state): State<Arc<AppState>>,
    Json(document): Json<DesignDocument>,
) -> ApiResult<(StatusCode, Json<DesignRecord>)> {
    Design::from_document(&document).map_err(ApiError::invalid)?;
    let t = now();
    let rec = DesignRecord { id: uuid::Uuid::new_v4().to_string(), revision: 1, created: t, modified: t, document };
    state.store().save_design(&rec).map_err(ApiError::internal)?;
    Ok((StatusCode::CREATED, Json(rec)))
}

async fn get_design(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<DesignRecord>> {
    load_design(&state, &id).map(Json)
}

#[derive(Deserialize)]
struct DesignUpdate {
    revision: u64,
    document: DesignDocument,
}

async fn update_design(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(update): Json<DesignUpdate>,
) -> ApiResult<Json<DesignRecord>> {
    let _guard = state.designs.lock().await;
    let mut rec = load_design(&state, &id)?;
    if rec.revision != update.revision {
        return Err(ApiError {
            status: StatusCode::CONFLICT,
            body: json!({
                "error": format!("revision {} is stale; current revision is {}", update.revision, rec.revision),
                "current_revision": rec.revision,
            }),
        });
    }
    Design::from_document(&update.document).map_err(ApiError::invalid)?;
    rec.revision += 1;
    rec.modified = now();
    rec.document = update.document;
    state.store().save_design(&rec).map_err(ApiError::internal)?;
    Ok(Json(rec))
}

#[derive(Deserialize)]
struct JobRequest {
    kind: JobKind,
}

async fn submit_job(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<JobRequest>,
) -> ApiResult<(StatusCode, Json<JobRecord>)> {
    let design = load_design(&state, &id)?;
    let job = state.jobs.submit(&design, req.kind).map_err(ApiError::invalid)?;
    Ok((StatusCode::ACCEPTED, Json(job)))
}

fn load_job(state: &AppState, id: &str) -> ApiResult<JobRecord> {
    state.jobs.get(id).ok_or_else(|| ApiError::not_found("job", id))
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<JobRecord>> {
    load_job(&state, &id).map(Json)
}

fn finished_output(state: &AppState, id: &str) -> ApiResult<RunOutput> {
    let job = load_job(state, id)?;
    match job.state {
        JobState::Done => {}
        JobState::Failed => {
            return Err(ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": "job failed", "detail": job.error }),
            })
        }
        JobState::Queued | JobState::Running => {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("job '{id}' has not finished")))
        }
    }
    state
        .jobs
        .result(&job)
        .map_err(ApiError::internal)?
        .ok_or_else(|| ApiError::internal(format!("result of job '{id}' is missing")))
}

async fn job_summary(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let body = match finished_output(&state, &id)? {
        RunOutput::Simulate { summary, energy_relative_error, .. } => {
            json!({ "kind": "simulate", "summary": summary, "energy_relative_error": energy_relative_error })
        }
        RunOutput::Sweep { report, .. } => json!({ "kind": "sweep", "report": report }),
    };
    Ok(Json(body))
}

#[derive(Deserialize)]
struct HeatmapQuery {
    layer: usize,
    format: Option<String>,
}

async fn job_heatmap(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HeatmapQuery>,
) -> ApiResult<Response> {
    let out = finished_output(&state, &id)?;
    if matches!(out, RunOutput::Sweep { .. }) {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "sweep jobs have no heatmaps"));
    }
    let map = out
        .heatmap(q.layer)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("layer {} does not exist", q.layer)))?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(map).into_response()),
        Some("grid") => Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], map.emit()).into_response()),
        Some(other) => Err(ApiError::new(StatusCode::BAD_REQUEST, format!("unknown format '{other}'"))),
    }
}

async fn job_ranking(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    match finished_output(&state, &id)? {
        RunOutput::Sweep { report, .. } => Ok(Json(json!({
            "baseline": report.baseline,
            "ranking": report.ranking,
            "errors": report.errors,
        }))),
        RunOutput::Simulate { .. } => Err(ApiError::new(StatusCode::NOT_FOUND, "simulation jobs have no ranking")),
    }
}

async fn job_artifact(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<Response> {
    let out = finished_output(&state, &id)?;
    let a = out.artifact(&name).ok_or_else(|| ApiError::not_found("artifact", &name))?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], a.contents.clone()).into_response())
}
