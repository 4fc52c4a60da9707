//! HTTP API. Every successful response names its scenario version in the
//! body and in the `X-Scenario-Version` header.

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use floodprio_core::prioritizer::WeightVector;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::ServiceError;
use crate::service::{ScenarioService, VersionInfo};

pub const VERSION_HEADER: &str = "x-scenario-version";

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, error) = match &self {
            ServiceError::Validation { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            ServiceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ServiceError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(ErrorBody { error, message: self.to_string() })).into_response()
    }
}

type ApiResult = Result<Response, ServiceError>;

fn versioned(version: u32, status: StatusCode, body: impl IntoResponse) -> Response {
    let mut resp = (status, body).into_response();
    resp.headers_mut().insert(VERSION_HEADER, HeaderValue::from(version));
    resp
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::internal(e.to_string()))?
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<u32>,
}

#[derive(Serialize)]
struct Created {
    scenario_id: String,
    version: u32,
    summary: crate::pipeline::Summary,
    timings: crate::pipeline::Timings,
}

#[derive(Serialize)]
struct Versions {
    scenario_id: String,
    version: u32,
    versions: Vec<VersionInfo>,
}

pub fn router(service: ScenarioService) -> Router {
    Router::new()
        .route("/scenarios", post(create))
        .route("/scenarios/{id}/versions", get(versions))
        .route("/scenarios/{id}/priomap", get(priomap))
        .route("/scenarios/{id}/tiles/{tile_id}", get(tile))
        .route("/scenarios/{id}/flood", post(flood))
        .route("/scenarios/{id}/weights", patch(weights))
        .route("/scenarios/{id}/summary", get(summary))
        .with_state(service)
}

async fn create(State(svc): State<ScenarioService>, body: String) -> ApiResult {
    let cfg = ScenarioConfig::from_toml_str(&body)?;
    let r = blocking(move || svc.run_scenario(&cfg)).await?;
    let version = r.version;
    Ok(versioned(
        version,
        StatusCode::CREATED,
        Json(Created { scenario_id: r.scenario_id, version, summary: r.summary, timings: r.timings }),
    ))
}

async fn versions(State(svc): State<ScenarioService>, Path(id): Path<String>) -> ApiResult {
    let (id, versions) = blocking(move || Ok((id.clone(), svc.list_versions(&id)?))).await?;
    let version = versions.last().map(|v| v.version).unwrap_or(0);
    Ok(versioned(version, StatusCode::OK, Json(Versions { scenario_id: id, version, versions })))
}

async fn priomap(
    State(svc): State<ScenarioService>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult {
    let (version, bytes) = blocking(move || svc.get_priomap(&id, q.version)).await?;
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/geo+json"));
    Ok(versioned(version, StatusCode::OK, (headers, bytes)))
}

async fn tile(
    State(svc): State<ScenarioService>,
    Path((id, tile_id)): Path<(String, u32)>,
    Query(q): Query<VersionQuery>,
) -> ApiResult {
    let detail = blocking(move || svc.get_tile_detail(&id, tile_id, q.version)).await?;
    Ok(versioned(detail.version, StatusCode::OK, Json(detail)))
}

async fn summary(
    State(svc): State<ScenarioService>,
    Path(id): Path<String>,
    Query(q): Query<VersionQuery>,
) -> ApiResult {
    let view = blocking(move || svc.get_summary(&id, q.version)).await?;
    Ok(versioned(view.version, StatusCode::OK, Json(view)))
}

/// Flood GeoJSON from a multipart upload (first part) or a raw body.
async fn flood_text(req: Request) -> Result<String, ServiceError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let bad = |e: &dyn std::fmt::Display| ServiceError::validation("ingest", e.to_string());
    if is_multipart {
        let mut mp = Multipart::from_request(req, &()).await.map_err(|e| bad(&e))?;
        let field = mp.next_field().await.map_err(|e| bad(&e))?.ok_or_else(|| bad(&"multipart body has no parts"))?;
        field.text().await.map_err(|e| bad(&e))
    } else {
        let bytes = Bytes::from_request(req, &()).await.map_err(|e| bad(&e))?;
        String::from_utf8(bytes.to_vec()).map_err(|e| bad(&e))
    }
}

async fn flood(State(svc): State<ScenarioService>, Path(id): Path<String>, req: Request) -> ApiResult {
    let text = flood_text(req).await?;
    let r = blocking(move || svc.update_flood(&id, &text)).await?;
    let version = r.version;
    Ok(versioned(
        version,
        StatusCode::CREATED,
        Json(serde_json::json!({
            "scenario_id": r.scenario_id,
            "version": version,
            "parent_version": r.parent_version,
            "summary": r.summary,
            "timings": r.timings,
            "monotonicity": r.monotonicity,
        })),
    ))
}

async fn weights(State(svc): State<ScenarioService>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let w: WeightVector =
        serde_json::from_slice(&body).map_err(|e| ServiceError::validation("weights", e.to_string()))?;
    let r = blocking(move || svc.update_weights(&id, &w)).await?;
    let version = r.version;
    Ok(versioned(
        version,
        StatusCode::CREATED,
        Json(serde_json::json!({
            "scenario_id": r.scenario_id,
            "version": version,
            "parent_version": r.parent_version,
            "summary": r.summary,
            "timings": r.timings,
        })),
    ))
}
