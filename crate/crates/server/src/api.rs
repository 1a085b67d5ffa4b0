//! HTTP routes under `/v1`.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use ideaspan_core::metrics::DiversityReport;
use ideaspan_core::session::{GraphNode, ImageRef};
use ideaspan_core::{ExpansionMode, NodeId, Session};
use serde::{Deserialize, Serialize};
use tracing::warn;

use crate::error::{ApiError, ErrorCode};
use crate::explorer::Explorer;
use crate::store::SessionStore;

pub struct AppState {
    pub explorer: Explorer,
    pub store: SessionStore,
    next_nonce: AtomicU64,
}

impl AppState {
    pub fn new(explorer: Explorer, store: SessionStore) -> Self {
        Self {
            explorer,
            store,
            next_nonce: AtomicU64::new(0),
        }
    }

    fn fresh_session_id(&self) -> String {
        loop {
            let id = self.explorer.session_id(self.next_nonce.fetch_add(1, Ordering::Relaxed));
            if !self.store.exists(&id) {
                return id;
            }
        }
    }

    /// Loads a session under its lock, applies `op`, and saves whenever the
    /// session changed, including when `op` failed after mutating it.
    async fn mutate<T, F>(&self, id: &str, op: F) -> Result<(T, Session), ApiError>
    where
        F: AsyncFnOnce(&Explorer, &mut Session) -> Result<T, ApiError>,
    {
        let _guard = self.store.lock(id).await;
        let before = self.store.load(id).await?;
        let mut session = before.clone();
        let result = op(&self.explorer, &mut session).await;
        if session != before {
            self.store.save(&session).await?;
        }
        result.map(|v| (v, session))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/metrics", get(metrics))
        .route("/v1/sessions/{id}/nodes/{nid}", delete(reject))
        .route("/v1/sessions/{id}/nodes/{nid}/expand", post(expand))
        .route("/v1/sessions/{id}/nodes/{nid}/images", post(images))
        .route("/v1/sessions/{id}/nodes/{nid}/branch", post(branch))
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::new(ErrorCode::Format, e.body_text()))
}

fn node_id(raw: &str) -> Result<NodeId, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::validation(format!("{raw:?} is not a node id")))
}

fn nodes(session: &Session, ids: &[NodeId]) -> Vec<GraphNode> {
    ids.iter().filter_map(|&id| session.node(id).ok().cloned()).collect()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub prompt: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub root: GraphNode,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionCreated>), ApiError> {
    let req = body(payload)?;
    let id = state.fresh_session_id();
    let _guard = state.store.lock(&id).await;
    let session = state.explorer.create(id.clone(), &req.prompt)?;
    state.store.save(&session).await?;
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id: id,
            root: session.root().clone(),
        }),
    ))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.store.load(&id).await?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExpandBody {
    pub char_start: usize,
    pub char_end: usize,
    pub mode: ExpansionMode,
    pub novelty: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Suggestions {
    pub parent: NodeId,
    pub suggestions: Vec<GraphNode>,
}

async fn expand(
    State(state): State<Arc<AppState>>,
    Path((id, nid)): Path<(String, String)>,
    payload: Result<Json<ExpandBody>, JsonRejection>,
) -> Result<Json<Suggestions>, ApiError> {
    let req = body(payload)?;
    let parent = node_id(&nid)?;
    let (ids, session) = state
        .mutate(&id, async |ex: &Explorer, s: &mut Session| {
            ex.expand(s, parent, req.char_start, req.char_end, req.mode, req.novelty).await
        })
        .await?;
    Ok(Json(Suggestions {
        parent,
        suggestions: nodes(&session, &ids),
    }))
}

#[derive(Debug, Deserialize)]
pub struct ImagesQuery {
    /// When false the call returns as soon as generation has started.
    #[serde(default = "default_wait")]
    pub wait: bool,
}

fn default_wait() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ImagesAttached {
    pub node: NodeId,
    pub pending: bool,
    pub images: Vec<ImageRef>,
}

async fn images(
    State(state): State<Arc<AppState>>,
    Path((id, nid)): Path<(String, String)>,
    Query(query): Query<ImagesQuery>,
) -> Result<Response, ApiError> {
    let node = node_id(&nid)?;
    let (prompt, _) = state
        .mutate(&id, async |_: &Explorer, s: &mut Session| {
            s.mark_images_pending(node)?;
            Ok(s.node(node)?.prompt_text.clone())
        })
        .await?;

    // Runs detached so a dropped client does not leave the node pending.
    let task_state = state.clone();
    let task_id = id.clone();
    let task = tokio::spawn(async move {
        let rendered = task_state.explorer.render(&prompt).await;
        let outcome = task_state
            .mutate(&task_id, async |ex: &Explorer, s: &mut Session| match rendered {
                Ok(images) => {
                    s.attach_images(node, images.clone(), ex.clock())?;
                    Ok(Ok(images))
                }
                Err(e) => {
                    s.clear_images_pending(node)?;
                    Ok(Err(e))
                }
            })
            .await;
        match outcome {
            Ok((result, _)) => result,
            Err(e) => Err(e),
        }
    });

    if !query.wait {
        let accepted = ImagesAttached {
            node,
            pending: true,
            images: Vec::new(),
        };
        return Ok((StatusCode::ACCEPTED, Json(accepted)).into_response());
    }
    let images = task.await.map_err(|e| {
        warn!(error = %e, "image task failed");
        ApiError::new(ErrorCode::Provider, "image generation task failed")
    })??;
    Ok(Json(ImagesAttached {
        node,
        pending: false,
        images,
    })
    .into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Replaced {
    pub removed: NodeId,
    pub replacement: GraphNode,
}

async fn reject(
    State(state): State<Arc<AppState>>,
    Path((id, nid)): Path<(String, String)>,
) -> Result<Json<Replaced>, ApiError> {
    let node = node_id(&nid)?;
    let (new_id, session) = state
        .mutate(&id, async |ex: &Explorer, s: &mut Session| ex.reject(s, node))
        .await?;
    Ok(Json(Replaced {
        removed: node,
        replacement: session.node(new_id)?.clone(),
    }))
}

async fn branch(
    State(state): State<Arc<AppState>>,
    Path((id, nid)): Path<(String, String)>,
) -> Result<Json<GraphNode>, ApiError> {
    let node = node_id(&nid)?;
    let (id, session) = state
        .mutate(&id, async |ex: &Explorer, s: &mut Session| ex.branch(s, node))
        .await?;
    Ok(Json(session.node(id)?.clone()))
}

async fn metrics(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<DiversityReport>, ApiError> {
    let session = state.store.load(&id).await?;
    Ok(Json(state.explorer.metrics(&session).await?))
}
