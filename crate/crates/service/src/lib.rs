//! HTTP session service: serves trained models as live adaptive
//! questionnaires, one question per request.
//!
//! ```text
//! POST   /v1/sessions              {model_id}  → 201 {session_id, question}
//! POST   /v1/sessions/{id}/answer  {choice}    → 200 {question} | {prediction}
//! GET    /v1/sessions/{id}                     → snapshot
//! DELETE /v1/sessions/{id}                     → 204
//! GET    /v1/models                            → model summaries
//! GET    /healthz                              → 200
//! ```

pub mod api;
pub mod sessions;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use surveyq_core::model::{ModelBundle, MODEL_FILE};
use surveyq_core::ModelError;
use tower_http::services::ServeDir;

use crate::sessions::SessionStore;

pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub listen: String,
    /// Directory whose subdirectories are model bundles; the subdirectory name is the model id.
    pub models: PathBuf,
    pub session_ttl_secs: u64,
    /// Static files served for paths outside the API (the web client).
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            models: PathBuf::from("models"),
            session_ttl_secs: DEFAULT_TTL.as_secs(),
            static_dir: None,
        }
    }
}

pub struct AppState {
    pub models: BTreeMap<String, Arc<ModelBundle>>,
    pub sessions: SessionStore,
}

impl AppState {
    pub fn new(models: BTreeMap<String, Arc<ModelBundle>>, ttl: Duration) -> Self {
        AppState {
            models,
            sessions: SessionStore::new(ttl),
        }
    }
}

/// Loads every bundle directly under `dir`.
pub fn load_models(dir: &Path) -> Result<BTreeMap<String, Arc<ModelBundle>>, ModelError> {
    let io = |source| surveyq_core::DataError::Io { path: dir.to_path_buf(), source };
    let mut models = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.join(MODEL_FILE).is_file() {
            let id = path.file_name().expect("entry has a name").to_string_lossy().into_owned();
            models.insert(id, Arc::new(ModelBundle::load(&path)?));
        }
    }
    Ok(models)
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route("/healthz", get(api::healthz))
        .route("/v1/models", get(api::list_models))
        .route("/v1/sessions", post(api::create_session))
        .route("/v1/sessions/{id}", get(api::get_session).delete(api::delete_session))
        .route("/v1/sessions/{id}/answer", post(api::answer))
        .with_state(state);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Binds and serves until the process is stopped, sweeping expired sessions
/// once a minute.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let models = load_models(&config.models)?;
    if models.is_empty() {
        return Err(format!("no model bundles under {}", config.models.display()).into());
    }
    let state = Arc::new(AppState::new(models, Duration::from_secs(config.session_ttl_secs)));
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sessions.sweep();
        }
    });
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
