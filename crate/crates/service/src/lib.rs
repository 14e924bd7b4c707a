//! HTTP+JSON front end for trained next-word models.
//!
//! Routes: `POST /api/predict`, `POST /api/accept`, `GET /api/info` and
//! `GET /healthz`. Bodies use snake_case keys; failures return
//! `{"error": {"code", "message"}}`.

mod error;
mod state;

use std::future::Future;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

pub use error::{ApiError, ErrorDetail};
pub use state::{Candidate, LoadedModel, ModelInfo, ServiceState, SessionTotals, MAX_K};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub context: Vec<String>,
    pub k: usize,
    #[serde(default)]
    pub frequent_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictResponse {
    pub candidates: Vec<Candidate>,
    pub model: String,
    pub excluded_oov: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptRequest {
    /// Omitted on the first accept of a new session.
    #[serde(default)]
    pub session: Option<String>,
    pub word: String,
    pub saved_chars: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptResponse {
    pub session: String,
    pub saved_chars: u64,
    /// The client-supplied `saved_chars` disagreed with `|word| - 1`.
    pub corrected: bool,
    pub totals: SessionTotals,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoResponse {
    pub models: Vec<ModelInfo>,
    pub version: &'static str,
}

type AppState = Arc<ServiceState>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::bad_body(&e.body_text()))
}

async fn predict(
    State(state): State<AppState>,
    payload: Result<Json<PredictRequest>, JsonRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let req = body(payload)?;
    let (name, model) = state.model(req.model.as_deref())?;
    let (candidates, excluded_oov) = state.predict(model, &req.context, req.k, req.frequent_limit)?;
    Ok(Json(PredictResponse {
        candidates,
        model: name.to_string(),
        excluded_oov,
    }))
}

async fn accept(
    State(state): State<AppState>,
    payload: Result<Json<AcceptRequest>, JsonRejection>,
) -> Result<Json<AcceptResponse>, ApiError> {
    let req = body(payload)?;
    let len = req.word.chars().count() as u64;
    if len == 0 || req.word.chars().any(char::is_whitespace) {
        return Err(ApiError::invalid("word must be a single non-empty word"));
    }
    let saved_chars = len - 1;
    let session = match req.session {
        Some(s) => s,
        None => state.new_session(),
    };
    let totals = state.accept(&session, saved_chars)?;
    Ok(Json(AcceptResponse {
        session,
        saved_chars,
        corrected: req.saved_chars != saved_chars,
        totals,
    }))
}

async fn info(State(state): State<AppState>) -> Json<InfoResponse> {
    Json(InfoResponse {
        models: state.info(),
        version: VERSION,
    })
}

async fn healthz() -> &'static str {
    "ok"
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/api/predict", post(predict))
        .route("/api/accept", post(accept))
        .route("/api/info", get(info))
        .route("/healthz", get(healthz))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<ServiceState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "listening");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
