//! HTTP/JSON session service over the taskbot pipeline.
//!
//! Routes:
//! - `POST /sessions` creates a session and returns its greeting.
//! - `POST /sessions/{id}/messages` with `{"text": ...}` runs one turn.
//! - `GET /sessions/{id}` returns the current snapshot and last response.
//!
//! Sessions live in memory. Each has its own lock, so turns on one
//! session are serialized while other sessions proceed. A periodic task
//! writes every session to a JSONL snapshot file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use taskbot_core::pipeline::{Session, TranscriptEntry, TurnError};
use taskbot_core::response::StateSnapshot;
use taskbot_core::{BotResponse, Resources};
use thiserror::Error;
use tokio::sync::{Mutex, RwLock};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("session {0} is closed")]
    Gone(String),
    #[error("snapshot {path}: {source}")]
    Snapshot {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("snapshot {path} line {line}: {source}")]
    SnapshotParse {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::Gone(_) => StatusCode::GONE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MessageRequest {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurnReply {
    pub session_id: String,
    pub response: BotResponse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub closed: bool,
    pub state_snapshot: StateSnapshot,
    pub last_response: Option<BotResponse>,
    pub transcript: Vec<TranscriptEntry>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Shared service state: immutable resources plus the session map.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    resources: Arc<Resources>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    snapshot_path: Option<PathBuf>,
}

impl AppState {
    pub fn new(resources: Arc<Resources>, snapshot_path: Option<PathBuf>) -> Self {
        Self {
            inner: Arc::new(Inner {
                resources,
                sessions: RwLock::new(HashMap::new()),
                snapshot_path,
            }),
        }
    }

    pub fn resources(&self) -> &Resources {
        &self.inner.resources
    }

    pub fn snapshot_path(&self) -> Option<&Path> {
        self.inner.snapshot_path.as_deref()
    }

    pub async fn create_session(&self) -> TurnReply {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let seed = u64::from_str_radix(&id[..16], 16).unwrap_or(0);
        let (session, response) = self.resources().new_session(id.clone(), seed, now_ms());
        self.inner
            .sessions
            .write()
            .await
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        TurnReply {
            session_id: id,
            response,
        }
    }

    async fn slot(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.inner
            .sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// Runs one turn. A failing module yields a help reply and the stored
    /// session is left exactly as it was.
    pub async fn post_message(&self, id: &str, text: &str) -> Result<TurnReply, ServiceError> {
        let slot = self.slot(id).await?;
        let mut guard = slot.lock().await;
        match self.resources().turn(&guard, text, now_ms()) {
            Ok(outcome) => {
                *guard = outcome.session;
                Ok(TurnReply {
                    session_id: id.to_string(),
                    response: outcome.response,
                })
            }
            Err(TurnError::Closed) => Err(ServiceError::Gone(id.to_string())),
            Err(e) => {
                tracing::error!(session = id, error = %e, "turn failed; state kept");
                Ok(TurnReply {
                    session_id: id.to_string(),
                    response: self.resources().failure_response(&guard),
                })
            }
        }
    }

    pub async fn get_session(&self, id: &str) -> Result<SessionView, ServiceError> {
        let slot = self.slot(id).await?;
        let s = slot.lock().await;
        Ok(SessionView {
            session_id: s.id.clone(),
            closed: s.is_closed(),
            state_snapshot: StateSnapshot::of(&s.state, &self.resources().corpus),
            last_response: s.last_response.clone(),
            transcript: s.transcript.clone(),
        })
    }

    /// Copy of a stored session, for inspection.
    pub async fn session(&self, id: &str) -> Option<Session> {
        let slot = self.slot(id).await.ok()?;
        let s = slot.lock().await;
        Some(s.clone())
    }

    /// All sessions as JSONL, sorted by id.
    pub async fn snapshot_jsonl(&self) -> String {
        let slots: Vec<Arc<Mutex<Session>>> = self.inner.sessions.read().await.values().cloned().collect();
        let mut sessions = Vec::with_capacity(slots.len());
        for slot in slots {
            sessions.push(slot.lock().await.clone());
        }
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        let mut out = String::new();
        for s in &sessions {
            out.push_str(&serde_json::to_string(s).expect("session serializes"));
            out.push('\n');
        }
        out
    }

    /// Writes the snapshot through a temporary file and a rename.
    pub async fn write_snapshot(&self) -> Result<(), ServiceError> {
        let Some(path) = self.snapshot_path() else {
            return Ok(());
        };
        let io = |source| ServiceError::Snapshot {
            path: path.to_path_buf(),
            source,
        };
        let body = self.snapshot_jsonl().await;
        let tmp = path.with_extension("jsonl.tmp");
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            tokio::fs::create_dir_all(dir).await.map_err(io)?;
        }
        tokio::fs::write(&tmp, body).await.map_err(io)?;
        tokio::fs::rename(&tmp, path).await.map_err(io)
    }

    /// Loads sessions from the snapshot file, if there is one.
    pub async fn restore(&self) -> Result<usize, ServiceError> {
        let Some(path) = self.snapshot_path() else {
            return Ok(0);
        };
        let text = match tokio::fs::read_to_string(path).await {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(source) => {
                return Err(ServiceError::Snapshot {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let mut map = self.inner.sessions.write().await;
        let mut n = 0;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let s: Session = serde_json::from_str(line).map_err(|source| ServiceError::SnapshotParse {
                path: path.to_path_buf(),
                line: i + 1,
                source,
            })?;
            map.insert(s.id.clone(), Arc::new(Mutex::new(s)));
            n += 1;
        }
        Ok(n)
    }

    /// Snapshots every `interval` until the process exits.
    pub fn spawn_snapshots(&self, interval: Duration) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(interval);
            tick.tick().await;
            loop {
                tick.tick().await;
                if let Err(e) = state.write_snapshot().await {
                    tracing::warn!(error = %e, "snapshot failed");
                }
            }
        })
    }
}

async fn create(State(state): State<AppState>) -> (StatusCode, Json<TurnReply>) {
    (StatusCode::CREATED, Json(state.create_session().await))
}

async fn message(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<MessageRequest>,
) -> Result<Json<TurnReply>, ServiceError> {
    state.post_message(&id, &req.text).await.map(Json)
}

async fn view(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionView>, ServiceError> {
    state.get_session(&id).await.map(Json)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view))
        .route("/sessions/{id}/messages", post(message))
        .with_state(state)
}

/// Serves `state` on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Binds `0.0.0.0:port`, restores the snapshot, and serves until the
/// process is stopped. A final snapshot is written on Ctrl-C.
pub async fn serve(resources: Arc<Resources>) -> std::io::Result<()> {
    let server = resources.settings.server.clone();
    let state = AppState::new(resources, Some(server.snapshot_path.clone()));
    match state.restore().await {
        Ok(n) if n > 0 => tracing::info!("restored {n} sessions"),
        Ok(_) => {}
        Err(e) => tracing::warn!(error = %e, "snapshot not restored"),
    }
    let _snapshots = state.spawn_snapshots(Duration::from_secs(server.snapshot_interval_secs.max(1)));
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", server.port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve_on(listener, state.clone(), async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    if let Err(e) = state.write_snapshot().await {
        tracing::warn!(error = %e, "final snapshot failed");
    }
    Ok(())
}
