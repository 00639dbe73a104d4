//! HTTP query service.
//!
//! - `POST /query` with `{"text": "...", "k": 5}` returns
//!   `{"results": [{"motion_id", "score", "rank"}]}`; `k` defaults to the
//!   configured value.
//! - `GET /motions/{id}` returns `{"fps", "joints"}` with one
//!   `[[x, y, z], ...]` list per frame.
//! - `GET /health` returns `{"status": "ok", "index_size": n}`.
//!
//! On SIGHUP the index file is re-read and swapped in as a new snapshot.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use motret::data::{Dataset, SkeletonSequence};
use motret::index::{EmbeddingStore, IndexHandle};
use motret::pipeline::encode_text;
use motret::space::RetrievalModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    /// Directory holding `motion.menc` and `text.tenc`.
    pub checkpoint: PathBuf,
    pub index: PathBuf,
    /// Dataset manifest for the playback endpoint.
    pub data: PathBuf,
    pub bind: SocketAddr,
    pub k_default: usize,
    /// Longest accepted query, in bytes.
    pub max_query_len: usize,
}

pub struct AppState {
    pub model: RetrievalModel,
    pub index: IndexHandle,
    pub motions: BTreeMap<String, SkeletonSequence>,
    pub k_default: usize,
    pub max_query_len: usize,
}

impl AppState {
    /// Checks that the model can embed free text into the index's space.
    pub fn new(
        model: RetrievalModel,
        index: EmbeddingStore,
        motions: BTreeMap<String, SkeletonSequence>,
        k_default: usize,
        max_query_len: usize,
    ) -> anyhow::Result<Self> {
        if index.dim() != model.config.d_common {
            bail!(
                "index has d = {} but the checkpoint embeds into d = {}",
                index.dim(),
                model.config.d_common
            );
        }
        if k_default == 0 {
            bail!("k_default must be ≥ 1");
        }
        model
            .featurize(&["probe"])
            .context("the checkpoint cannot embed free-text queries")?;
        Ok(AppState {
            model,
            index: IndexHandle::new(index),
            motions,
            k_default,
            max_query_len,
        })
    }

    pub fn load(cfg: &ServiceConfig) -> anyhow::Result<Self> {
        let model = RetrievalModel::load(&cfg.checkpoint)
            .with_context(|| format!("loading checkpoint {}", cfg.checkpoint.display()))?;
        let index = EmbeddingStore::load(&cfg.index)
            .with_context(|| format!("loading index {}", cfg.index.display()))?;
        let ds = Dataset::load(&cfg.data).with_context(|| format!("loading dataset {}", cfg.data.display()))?;
        AppState::new(model, index, ds.motions, cfg.k_default, cfg.max_query_len)
    }
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub text: String,
    pub k: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub motion_id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub results: Vec<QueryResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionResponse {
    pub fps: f32,
    pub joints: Vec<Vec<[f32; 3]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub index_size: usize,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/query", post(query))
        .route("/motions/{id}", get(motion))
        .route("/health", get(health))
        .with_state(state)
}

async fn query(
    State(state): State<Arc<AppState>>,
    Json(req): Json<QueryRequest>,
) -> Result<Json<QueryResponse>, ApiError> {
    if req.text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "text is empty"));
    }
    if req.text.len() > state.max_query_len {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("text longer than {} bytes", state.max_query_len),
        ));
    }
    let k = req.k.unwrap_or(state.k_default as i64);
    if k < 1 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "k must be ≥ 1"));
    }
    let worker = state.clone();
    let ranked = tokio::task::spawn_blocking(move || {
        let q = encode_text(&worker.model, &req.text)?;
        worker.index.snapshot().knn_query("query", &q, k as usize)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    Ok(Json(QueryResponse {
        results: ranked
            .hits
            .into_iter()
            .enumerate()
            .map(|(i, h)| QueryResult {
                motion_id: h.motion_id,
                score: h.score,
                rank: i + 1,
            })
            .collect(),
    }))
}

async fn motion(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<MotionResponse>, ApiError> {
    let m = state
        .motions
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown motion `{id}`")))?;
    Ok(Json(MotionResponse {
        fps: m.fps,
        joints: m.joint_positions(),
    }))
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        index_size: state.index.snapshot().len(),
    })
}

#[cfg(unix)]
async fn reload_on_hangup(state: Arc<AppState>, path: PathBuf) {
    use tokio::signal::unix::{signal, SignalKind};
    let Ok(mut hup) = signal(SignalKind::hangup()) else {
        return;
    };
    while hup.recv().await.is_some() {
        match EmbeddingStore::load(&path) {
            Ok(s) if s.dim() == state.model.config.d_common => {
                let n = s.len();
                state.index.swap(s);
                eprintln!("reloaded index: {n} motions");
            }
            Ok(s) => eprintln!("reload skipped: index has d = {}", s.dim()),
            Err(e) => eprintln!("reload failed: {e}"),
        }
    }
}

/// Runs until interrupted.
pub async fn serve(cfg: ServiceConfig) -> anyhow::Result<()> {
    let state = Arc::new(AppState::load(&cfg)?);
    #[cfg(unix)]
    tokio::spawn(reload_on_hangup(state.clone(), cfg.index.clone()));
    let listener = tokio::net::TcpListener::bind(cfg.bind)
        .await
        .with_context(|| format!("binding {}", cfg.bind))?;
    eprintln!(
        "serving {} motions on http://{}",
        state.index.snapshot().len(),
        listener.local_addr()?
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
