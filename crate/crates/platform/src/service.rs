//! HTTP endpoints over the JSON encodings.
//!
//! | method | path             | body / query                        | answer                |
//! |--------|------------------|-------------------------------------|-----------------------|
//! | POST   | `/policies`      | usage policy, XML or JSON           | policy summary        |
//! | GET    | `/policies`      |                                     | usage policies        |
//! | POST   | `/data/readings` | readings, CSV                       | ingest summary        |
//! | POST   | `/query`         | consumer request, optional `window` | decision, data items  |
//! | GET    | `/usage-history` | `policy`, `subject`, `outcome`, `from`, `to` | usage records |
//! | GET    | `/vocabulary`    |                                     | scope vocabulary      |
//! | GET    | `/health`        |                                     | status and counts     |
//!
//! Errors come back as `{"error": "..."}` with status 400 when the input is
//! at fault and 500 otherwise.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query as UrlQuery, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tdu_core::ledger::{HistoryFilter, UsageRecord};
use tdu_core::tduo::UsagePolicy;

use crate::ontology::{vocabulary, Vocabulary};
use crate::platform::Status;
use crate::{Config, IngestSummary, Platform, PlatformError, PolicySummary, Query, QueryResponse};

pub struct ApiError(PlatformError);

impl From<PlatformError> for ApiError {
    fn from(e: PlatformError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = if self.0.is_client_error() {
            StatusCode::BAD_REQUEST
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        (status, Json(json!({ "error": self.0.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs `f` on the blocking pool; platform calls do file I/O and may
/// reason for a while.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, PlatformError> + Send + 'static,
) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError),
        Err(e) => Err(ApiError(PlatformError::Invalid(format!(
            "worker failed: {e}"
        )))),
    }
}

async fn add_policy(
    State(p): State<Arc<Platform>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<PolicySummary>)> {
    let summary = blocking(move || p.add_policy_document(&body)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_policies(State(p): State<Arc<Platform>>) -> Json<Vec<UsagePolicy>> {
    Json(p.policies())
}

async fn ingest(State(p): State<Arc<Platform>>, body: Bytes) -> ApiResult<Json<IngestSummary>> {
    Ok(Json(blocking(move || p.ingest_csv(&body)).await?))
}

async fn query(
    State(p): State<Arc<Platform>>,
    Json(q): Json<Query>,
) -> ApiResult<Json<QueryResponse>> {
    Ok(Json(blocking(move || p.query(&q)).await?))
}

async fn history(
    State(p): State<Arc<Platform>>,
    UrlQuery(filter): UrlQuery<HistoryFilter>,
) -> Json<Vec<UsageRecord>> {
    Json(p.history(&filter))
}

async fn vocabulary_handler() -> Json<Vocabulary> {
    Json(vocabulary())
}

async fn health(State(p): State<Arc<Platform>>) -> Json<Status> {
    Json(p.status())
}

pub fn router(platform: Arc<Platform>) -> Router {
    Router::new()
        .route("/policies", post(add_policy).get(list_policies))
        .route("/data/readings", post(ingest))
        .route("/query", post(query))
        .route("/usage-history", get(history))
        .route("/vocabulary", get(vocabulary_handler))
        .route("/health", get(health))
        .with_state(platform)
}

/// Opens the platform of `config` and serves it on `config.port` until
/// `shutdown` resolves. In-flight requests finish first; every ledger
/// append is synced before it is acknowledged, so nothing is left to flush.
pub async fn serve(
    config: Config,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), PlatformError> {
    let port = config.port;
    let platform = tokio::task::spawn_blocking(move || Platform::open(config))
        .await
        .map_err(|e| PlatformError::Invalid(format!("startup failed: {e}")))??;
    let platform = Arc::new(platform);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port))
        .await
        .map_err(|source| PlatformError::Bind { port, source })?;
    axum::serve(listener, router(platform))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
