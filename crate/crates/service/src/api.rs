//! HTTP API over one project.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use bluegreen_core::hydro::InterventionSpec;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::artifacts;
use crate::engine::Engine;
use crate::error::{ServiceError, SCHEMA_VERSION};
use crate::jobs::JobManager;
use crate::render;

pub const PORT_ENV: &str = "BLUEGREEN_PORT";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Clone)]
pub struct AppState {
    pub jobs: JobManager,
}

impl AppState {
    fn engine(&self) -> &Arc<Engine> {
        self.jobs.engine()
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, json_bytes(&self.to_json())).into_response()
    }
}

fn query_err(e: QueryRejection) -> ServiceError {
    ServiceError::Usage(e.body_text())
}

type ApiResult = Result<Response, ServiceError>;

fn json_bytes(v: &Value) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], artifacts::to_bytes(v)).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/project", get(project))
        .route("/tiles", get(tiles))
        .route("/runs", axum::routing::post(submit_runs))
        .route("/runs/:id", get(run_status))
        .route("/results/:key/depth", get(depth))
        .route("/results/:key/exposure", get(exposure))
        .route("/results/:key/damages", get(damages))
        .route("/ranking", get(ranking))
        .route("/interventions", get(list_interventions).post(put_intervention))
        .route("/interventions/:id", get(get_intervention))
        .route("/diff", get(diff))
        .with_state(state)
}

async fn project(State(s): State<AppState>) -> ApiResult {
    Ok(json_bytes(&s.engine().project.summary()))
}

async fn tiles(State(s): State<AppState>) -> ApiResult {
    let e = s.engine();
    Ok(json_bytes(&artifacts::tiles_json(e.catchment(), e.project.file.gf_threshold)))
}

#[derive(Deserialize)]
struct RunRequest {
    keys: Vec<String>,
}

async fn submit_runs(State(s): State<AppState>, body: Result<Json<RunRequest>, JsonRejection>) -> ApiResult {
    let Json(req) = body.map_err(|e| ServiceError::Usage(e.body_text()))?;
    let keys = req
        .keys
        .iter()
        .map(|k| s.engine().parse_key(k))
        .collect::<Result<Vec<_>, _>>()?;
    let job = s.jobs.submit(keys)?;
    let mut resp = json_bytes(&json!({
        "schema_version": SCHEMA_VERSION,
        "job_id": job.id,
        "state": job.state,
    }));
    *resp.status_mut() = StatusCode::ACCEPTED;
    Ok(resp)
}

async fn run_status(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let job = s.jobs.get(&id).ok_or_else(|| ServiceError::NotFound(format!("job {id}")))?;
    Ok(json_bytes(&serde_json::to_value(job).expect("json")))
}

fn result_of(s: &AppState, key: &str) -> Result<Arc<bluegreen_core::planner::ScenarioResult>, ServiceError> {
    let e = s.engine();
    e.result(&e.parse_key(key)?)
}

#[derive(Deserialize)]
struct DepthQuery {
    format: Option<String>,
}

async fn depth(State(s): State<AppState>, Path(key): Path<String>, q: Result<Query<DepthQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = q.map_err(query_err)?;
    let r = result_of(&s, &key)?;
    let (body, mime) = match q.format.as_deref().unwrap_or("bgdr") {
        "bgdr" => (artifacts::depth_bgdr(&r), "application/octet-stream"),
        "png" => (render::depth_png(&r.max_depth), "image/png"),
        "asc" => (artifacts::depth_asc(&r), "text/plain"),
        other => return Err(ServiceError::Usage(format!("unknown raster format '{other}' (bgdr, png, asc)"))),
    };
    let georef = json!(r.max_depth.georef).to_string();
    let mut resp = ([(header::CONTENT_TYPE, mime)], body).into_response();
    resp.headers_mut()
        .insert("x-georef", HeaderValue::from_str(&georef).expect("ascii header"));
    Ok(resp)
}

async fn exposure(State(s): State<AppState>, Path(key): Path<String>) -> ApiResult {
    let r = result_of(&s, &key)?;
    let mut resp = json_bytes(&artifacts::exposure_json(s.engine().catchment(), &r));
    resp.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/geo+json"));
    Ok(resp)
}

async fn damages(State(s): State<AppState>, Path(key): Path<String>) -> ApiResult {
    let r = result_of(&s, &key)?;
    Ok(json_bytes(&artifacts::damages_json(&r)))
}

#[derive(Deserialize)]
struct RankQuery {
    rp: Option<f64>,
    capture_fraction: Option<f64>,
}

async fn ranking(State(s): State<AppState>, q: Result<Query<RankQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = q.map_err(query_err)?;
    let rp = q.rp.ok_or_else(|| ServiceError::Usage("rp is required".into()))?;
    let r = s.engine().ranking(rp, q.capture_fraction.unwrap_or(1.0))?;
    Ok(json_bytes(&artifacts::ranking_json(&r)))
}

#[derive(Deserialize)]
struct PutSet {
    set_id: String,
    #[serde(default)]
    expected_version: Option<u64>,
    specs: Vec<InterventionSpec>,
}

async fn put_intervention(
    State(s): State<AppState>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult {
    let Json(raw) = body.map_err(|e| ServiceError::Usage(e.body_text()))?;
    // Malformed specs (bad geometry JSON, unknown type) are invalid input.
    let req: PutSet = serde_json::from_value(raw).map_err(|e| ServiceError::Invalid(e.to_string()))?;
    let engine = s.engine().clone();
    let set = tokio::task::spawn_blocking(move || engine.put_set(&req.set_id, req.expected_version, req.specs))
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))??;
    let costs = s.engine().costs(&set.specs)?;
    Ok(json_bytes(&artifacts::set_json(&set, &costs)))
}

async fn get_intervention(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let e = s.engine();
    let set = e
        .interventions
        .get(&id)
        .ok_or_else(|| ServiceError::NotFound(format!("intervention set '{id}'")))?;
    let costs = e.costs(&set.specs)?;
    Ok(json_bytes(&artifacts::set_json(&set, &costs)))
}

async fn list_interventions(State(s): State<AppState>) -> ApiResult {
    let e = s.engine();
    let mut sets = Vec::new();
    for set in e.interventions.list() {
        let costs = e.costs(&set.specs)?;
        sets.push(artifacts::set_json(&set, &costs));
    }
    Ok(json_bytes(&json!({"schema_version": SCHEMA_VERSION, "sets": sets})))
}

#[derive(Deserialize)]
struct DiffQuery {
    base: String,
    variant: String,
}

async fn diff(State(s): State<AppState>, q: Result<Query<DiffQuery>, QueryRejection>) -> ApiResult {
    let Query(q) = q.map_err(query_err)?;
    let base = result_of(&s, &q.base)?;
    let variant = result_of(&s, &q.variant)?;
    Ok(json_bytes(&artifacts::diff_json(&base, &variant)?))
}

/// Port from the environment, else the default.
pub fn port_from_env() -> Result<u16, ServiceError> {
    match std::env::var(PORT_ENV) {
        Ok(v) => v
            .parse()
            .map_err(|_| ServiceError::Usage(format!("{PORT_ENV}='{v}' is not a port number"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}
