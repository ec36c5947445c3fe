//! HTTP+JSON service over the design engine: a persisted design store,
//! synchronous evaluation, and evolution sessions that pause at human
//! checkpoints until a client picks a candidate.

mod error;
mod sessions;
mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gamesys_core::design::load_design;
use gamesys_core::evolution::EvolutionConfig;
use gamesys_core::sim::{evaluate, Metric, MetricWeights, PlaythroughReport, SimConfig};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

pub use error::{ApiError, ErrorBody};
pub use sessions::{
    PendingCandidate, Session, SessionError, SessionMode, SessionRegistry, SessionState, SessionStatus,
};
pub use store::{DesignStore, StoreError, StoredDesign};

/// Server settings. The sim and GA configs fill in whatever a request
/// leaves out.
#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub sim: SimConfig,
    pub evolution: EvolutionConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("data"),
            sim: SimConfig::default(),
            evolution: EvolutionConfig::default(),
        }
    }
}

pub struct AppState {
    pub store: DesignStore,
    pub sessions: SessionRegistry,
    pub sim: SimConfig,
    pub evolution: EvolutionConfig,
    /// Bounds concurrent evaluations running off the request path.
    evaluations: Semaphore,
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> std::io::Result<Self> {
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
        Ok(AppState {
            store: DesignStore::open(config.data_dir.join("designs"))?,
            sessions: SessionRegistry::default(),
            sim: config.sim.clone(),
            evolution: config.evolution.clone(),
            evaluations: Semaphore::new(workers),
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/designs", get(list_designs).post(create_design))
        .route("/designs/{id}", get(get_design).put(update_design).delete(delete_design))
        .route("/designs/{id}/evaluate", post(evaluate_design))
        .route("/sessions", post(start_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/choice", post(choose))
        .route("/sessions/{id}/abort", post(abort))
        .route("/sessions/{id}/result", get(session_result))
        .with_state(state)
}

/// Binds `config.listen` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = Arc::new(AppState::new(&config)?);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    axum::serve(listener, router(state)).await
}

type ApiResult<T> = Result<T, ApiError>;

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

fn store_error(e: StoreError) -> ApiError {
    match e {
        StoreError::NotFound(id) => ApiError::not_found("design", &id),
        e @ StoreError::RevisionConflict { .. } => ApiError::conflict("REVISION_CONFLICT", e.to_string()),
        StoreError::Io(e) => ApiError::internal(e.to_string()),
    }
}

fn with_etag(status: StatusCode, stored: StoredDesign) -> Response {
    let etag = format!("\"{}\"", stored.revision);
    (status, [(header::ETAG, etag)], Json(stored)).into_response()
}

fn design_from_body(body: &[u8]) -> ApiResult<gamesys_core::design::GameDesign> {
    let text =
        std::str::from_utf8(body).map_err(|_| ApiError::bad_request("PARSE_ERROR", "body is not UTF-8"))?;
    Ok(load_design(text)?)
}

async fn list_designs(State(app): State<Arc<AppState>>) -> Json<Vec<StoredDesign>> {
    Json(app.store.list())
}

async fn create_design(State(app): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let design = design_from_body(&body)?;
    let stored = app.store.create(design).map_err(store_error)?;
    Ok(with_etag(StatusCode::CREATED, stored))
}

async fn get_design(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let stored = app.store.get(&id).ok_or_else(|| ApiError::not_found("design", &id))?;
    Ok(with_etag(StatusCode::OK, stored))
}

/// Reads the expected revision from `If-Match`, bare or quoted.
fn expected_revision(headers: &HeaderMap) -> ApiResult<Option<u64>> {
    let Some(value) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    value
        .to_str()
        .ok()
        .and_then(|v| v.trim().trim_matches('"').parse().ok())
        .map(Some)
        .ok_or_else(|| ApiError::bad_request("MALFORMED_REVISION", "If-Match must carry a revision number"))
}

async fn update_design(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let expected = expected_revision(&headers)?;
    if app.store.get(&id).is_none() {
        return Err(ApiError::not_found("design", &id));
    }
    let design = design_from_body(&body)?;
    let stored = app.store.update(&id, design, expected).map_err(store_error)?;
    Ok(with_etag(StatusCode::OK, stored))
}

async fn delete_design(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    app.store.delete(&id).map_err(store_error)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
struct EvaluateRequest {
    /// Metric name to weight; unnamed metrics keep weight 1.
    weights: BTreeMap<String, f64>,
    sim_config: Option<SimConfig>,
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct EvaluateResponse {
    design_id: String,
    seed: u64,
    weights: MetricWeights,
    sim_config: SimConfig,
    report: PlaythroughReport,
    summary: String,
}

fn weights_from_map(map: &BTreeMap<String, f64>) -> ApiResult<MetricWeights> {
    let mut w = MetricWeights::default();
    for (name, &value) in map {
        let metric: Metric = name.parse().map_err(|e: gamesys_core::sim::UnknownMetric| {
            ApiError::bad_request("UNKNOWN_METRIC", e.to_string())
        })?;
        w.set(metric, value);
    }
    Ok(w)
}

async fn evaluate_design(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<EvaluateResponse>> {
    let stored = app.store.get(&id).ok_or_else(|| ApiError::not_found("design", &id))?;
    let req: EvaluateRequest =
        if body.is_empty() { EvaluateRequest::default() } else { error::parse_body(&body)? };
    let weights = weights_from_map(&req.weights)?;
    let mut sim = req.sim_config.unwrap_or_else(|| app.sim.clone());
    if let Some(seed) = req.seed {
        sim.seed = seed;
    }
    let _permit = app.evaluations.acquire().await.map_err(|e| ApiError::internal(e.to_string()))?;
    let (design, cfg) = (stored.design, sim.clone());
    let outcome = tokio::task::spawn_blocking(move || evaluate(&design, &weights, &cfg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let (report, summary) = outcome.map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    Ok(Json(EvaluateResponse { design_id: id, seed: sim.seed, weights, sim_config: sim, report, summary }))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct StartRequest {
    design_id: String,
    mode: SessionMode,
    /// Defaults to the server's GA config.
    config: Option<EvolutionConfig>,
}

fn session_error(e: SessionError) -> ApiError {
    match e {
        SessionError::WrongState(_) => ApiError::conflict("WRONG_STATE", e.to_string()),
        SessionError::IndexOutOfRange { .. } => ApiError::bad_request("INDEX_OUT_OF_RANGE", e.to_string()),
    }
}

fn session(app: &AppState, id: &str) -> ApiResult<Arc<Session>> {
    app.sessions.get(id).ok_or_else(|| ApiError::not_found("session", id))
}

async fn start_session(
    State(app): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<SessionState>)> {
    let req: StartRequest = error::parse_body(&body)?;
    let stored =
        app.store.get(&req.design_id).ok_or_else(|| ApiError::not_found("design", &req.design_id))?;
    let config = req.config.unwrap_or_else(|| app.evolution.clone());
    config.check().map_err(|e| ApiError::bad_request(e.code(), e.to_string()))?;
    let s = app.sessions.start(&stored.id, stored.design, req.mode, config);
    Ok((StatusCode::CREATED, Json(s.snapshot())))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<SessionState>> {
    Ok(Json(session(&app, &id)?.snapshot()))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ChoiceRequest {
    candidate_index: usize,
}

async fn choose(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<SessionState>> {
    let s = session(&app, &id)?;
    let req: ChoiceRequest = error::parse_body(&body)?;
    Ok(Json(s.choose(req.candidate_index).map_err(session_error)?))
}

/// Stops the run and waits for its best-so-far result to be finalized.
async fn abort(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionState>> {
    let s = session(&app, &id)?;
    s.request_abort().map_err(session_error)?;
    s.settled().await;
    Ok(Json(s.snapshot()))
}

async fn session_result(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<gamesys_core::evolution::EvolutionResult>> {
    Ok(Json(session(&app, &id)?.result().map_err(session_error)?))
}
