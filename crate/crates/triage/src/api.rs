//! HTTP layer over [`TriageState`].
//!
//! Writes go through one mutex-guarded [`DecisionLog`]: a decision is
//! validated, synced to disk, then applied, all while holding the writer
//! lock, so readers never observe a decision that is not yet durable.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;
use varmap_core::corpus::write_generic_csv;

use crate::decisions::{DecidedLabel, DecisionLog, LabelDecision};
use crate::state::{TriageError, TriageState};

pub const DEFAULT_LIMIT: usize = 20;

pub struct Service {
    state: RwLock<TriageState>,
    writer: Mutex<DecisionLog>,
}

impl Service {
    /// Opens the decision log at `log_path` and replays it onto `base`.
    pub fn open(base: TriageState, log_path: impl Into<PathBuf>) -> Result<Arc<Self>, TriageError> {
        let (writer, existing) = DecisionLog::open(log_path.into())?;
        let state = base.replay(&existing)?;
        Ok(Arc::new(Self {
            state: RwLock::new(state),
            writer: Mutex::new(writer),
        }))
    }

    pub fn snapshot(&self) -> std::sync::RwLockReadGuard<'_, TriageState> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn record(&self, decision: LabelDecision) -> Result<bool, TriageError> {
        let mut writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        self.snapshot().check(&decision)?;
        writer.append(&decision)?;
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        Ok(state.apply(decision)?.superseded)
    }
}

struct ApiError(StatusCode, String);

impl From<TriageError> for ApiError {
    fn from(e: TriageError) -> Self {
        let status = match e {
            TriageError::UnknownInstance(_) | TriageError::UnknownScorer(_) | TriageError::NoRankings => {
                StatusCode::NOT_FOUND
            }
            TriageError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type Shared = Arc<Service>;

pub fn router(service: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/scorers", get(scorers))
        .route("/api/queue", get(queue))
        .route("/api/decisions", post(decide))
        .route("/api/stats", get(stats))
        .route("/api/instances/{id}", get(instance))
        .route("/api/export", get(export))
        .route("/api/export/report", get(export_report))
        .with_state(service);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(service: Shared, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("triage service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn scorers(State(s): State<Shared>) -> Json<Vec<String>> {
    Json(s.snapshot().scorers().map(str::to_string).collect())
}

#[derive(Deserialize)]
struct QueueParams {
    scorer: Option<String>,
    limit: Option<usize>,
    annotator: Option<String>,
}

async fn queue(State(s): State<Shared>, Query(p): Query<QueueParams>) -> Result<Response, ApiError> {
    let batch = s.snapshot().next_batch(
        p.scorer.as_deref(),
        p.limit.unwrap_or(DEFAULT_LIMIT),
        p.annotator.as_deref(),
    )?;
    Ok(Json(batch).into_response())
}

/// Body of `POST /api/decisions`; the timestamp defaults to receipt time.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionRequest {
    instance_id: String,
    decided_label: DecidedLabel,
    annotator_id: String,
    timestamp: Option<DateTime<Utc>>,
}

async fn decide(State(s): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: DecisionRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let decision = LabelDecision {
        instance_id: req.instance_id,
        decided_label: req.decided_label,
        annotator_id: req.annotator_id,
        timestamp: req.timestamp.unwrap_or_else(Utc::now),
    };
    let superseded = s.record(decision.clone())?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "decision": decision, "superseded": superseded })),
    )
        .into_response())
}

async fn stats(State(s): State<Shared>) -> Response {
    Json(s.snapshot().stats()).into_response()
}

async fn instance(State(s): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(s.snapshot().instance(&id)?).into_response())
}

async fn export(State(s): State<Shared>) -> Result<Response, ApiError> {
    let (merged, _) = s.snapshot().export_merged();
    let mut body = Vec::new();
    write_generic_csv(&merged, &mut body).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8"),
            (header::CONTENT_DISPOSITION, "attachment; filename=\"merged.csv\""),
        ],
        body,
    )
        .into_response())
}

async fn export_report(State(s): State<Shared>) -> Response {
    Json(s.snapshot().export_merged().1).into_response()
}
