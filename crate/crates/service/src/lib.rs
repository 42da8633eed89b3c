//! HTTP/JSON sessions over the specialization engine.
//!
//! Every session owns one diagram, its widget tree and the current
//! configuration. Requests to one session are serialized by a per-session
//! lock; the session table itself is only locked for insert, lookup and
//! removal. Error responses never change a session.
//!
//! The wire format is described in `docs/protocol.md`.

mod api;
mod error;
pub mod recording;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use varigen_core::config::ConfigError;
use varigen_core::frame::{parse_frames, FrameLibrary};
use varigen_core::generator::{emit_preview, emit_spec, generate, parse_rules, GenError, RuleSet};
use varigen_core::model::{validate_model, Severity};
use varigen_core::widget::{compute_enablement, derive_notifications, transform, WidgetTree};
use varigen_core::{parse_model, Configuration, FinalizePolicy, Status};

pub use api::*;
pub use error::ApiError;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Sessions untouched for this long are dropped.
    pub idle_timeout: Duration,
    /// `generate` writes each session's tree to `out_root/<session id>`.
    pub out_root: PathBuf,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            idle_timeout: Duration::from_secs(30 * 60),
            out_root: std::env::temp_dir().join("varigen-sessions"),
        }
    }
}

struct Session {
    id: String,
    config: Configuration,
    tree: WidgetTree,
    generator: Option<(FrameLibrary, RuleSet)>,
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    last_used: Instant,
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Entry>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState {
            sessions: Arc::new(Mutex::new(HashMap::new())),
            config: Arc::new(config),
        }
    }

    pub fn session_count(&self) -> usize {
        let mut table = self.sessions.lock().expect("session table");
        self.sweep(&mut table);
        table.len()
    }

    /// Drops idle sessions that no request is using.
    fn sweep(&self, table: &mut HashMap<String, Entry>) {
        let ttl = self.config.idle_timeout;
        table.retain(|_, e| e.last_used.elapsed() < ttl || Arc::strong_count(&e.session) > 1);
    }

    fn lookup(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let mut table = self.sessions.lock().expect("session table");
        self.sweep(&mut table);
        let entry = table
            .get_mut(id)
            .ok_or_else(|| ApiError::unknown_session(id))?;
        entry.last_used = Instant::now();
        Ok(entry.session.clone())
    }

    fn insert(&self, session: Session) {
        let mut table = self.sessions.lock().expect("session table");
        self.sweep(&mut table);
        table.insert(
            session.id.clone(),
            Entry {
                session: Arc::new(tokio::sync::Mutex::new(session)),
                last_used: Instant::now(),
            },
        );
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/widgets", get(get_widgets))
        .route("/sessions/{id}/decisions", post(post_decision))
        .route("/sessions/{id}/undo", post(post_undo))
        .route("/sessions/{id}/spec", get(get_spec))
        .route("/sessions/{id}/generate", post(post_generate))
        .with_state(state)
}

/// Runs the service until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(config))).await
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ApiError::bad_request(e.body_text()))
}

fn snapshot(s: &Session) -> SessionState {
    let c = &s.config;
    let (complete, obligations) = match c.status() {
        Status::Complete => (true, Vec::new()),
        Status::Incomplete(o) => (false, o),
    };
    SessionState {
        id: s.id.clone(),
        decisions: c
            .decisions()
            .iter()
            .map(|&(f, value)| Decision {
                feature: c.diagram().name_of(f).to_string(),
                value,
            })
            .collect(),
        states: c.named_states().into_iter().collect(),
        enablement: compute_enablement(&s.tree, c).expect("tree built from this diagram"),
        complete,
        obligations,
    }
}

async fn create_session(
    State(state): State<AppState>,
    payload: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let req = body(payload)?;
    let d = parse_model(&req.model)
        .map_err(|e| ApiError::invalid("invalid_model", StatusCode::BAD_REQUEST, e))?;
    let problems: Vec<_> = validate_model(&d)
        .into_iter()
        .filter(|p| p.severity == Severity::Error)
        .collect();
    if !problems.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_model",
            format!("model has {} error(s)", problems.len()),
            problems
                .iter()
                .map(|p| serde_json::to_value(p).expect("diagnostic"))
                .collect(),
        ));
    }
    let generator = match (req.frames, req.rules) {
        (None, None) => None,
        (Some(frames), Some(rules)) => {
            let lib = parse_frames(&frames)
                .map_err(|e| ApiError::invalid("invalid_frames", StatusCode::BAD_REQUEST, e))?;
            let rules = parse_rules(&rules)
                .map_err(|e| ApiError::invalid("invalid_rules", StatusCode::BAD_REQUEST, e))?;
            rules.bind(&d, &lib).map_err(|e| {
                ApiError::invalid("invalid_rules", StatusCode::UNPROCESSABLE_ENTITY, e)
            })?;
            Some((lib, rules))
        }
        _ => {
            return Err(ApiError::bad_request(
                "`frames` and `rules` go together".into(),
            ))
        }
    };
    let d = Arc::new(d);
    let config = Configuration::init(d.clone()).map_err(ApiError::from_config)?;
    let session = Session {
        id: uuid::Uuid::new_v4().to_string(),
        tree: transform(&d),
        config,
        generator,
    };
    let response = CreateResponse {
        widgets: session.tree.clone(),
        state: snapshot(&session),
    };
    state.insert(session);
    Ok((StatusCode::CREATED, Json(response)))
}

async fn get_widgets(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<CreateResponse>, ApiError> {
    let session = state.lookup(&id)?;
    let s = session.lock().await;
    Ok(Json(CreateResponse {
        widgets: s.tree.clone(),
        state: snapshot(&s),
    }))
}

async fn post_decision(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<Decision>, JsonRejection>,
) -> Result<Json<DecisionResponse>, ApiError> {
    let req = body(payload)?;
    let session = state.lookup(&id)?;
    let mut s = session.lock().await;
    let (next, report) = s
        .config
        .apply_decision(&req.feature, req.value)
        .map_err(ApiError::from_config)?;
    let notifications = derive_notifications(&s.tree, &report, &req.feature, req.value);
    s.config = next;
    Ok(Json(DecisionResponse {
        changed: report.changed,
        notifications,
        state: snapshot(&s),
    }))
}

async fn post_undo(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<UndoResponse>, ApiError> {
    let session = state.lookup(&id)?;
    let mut s = session.lock().await;
    let before = s.config.clone();
    let (f, prev) = before.undo().ok_or_else(|| {
        ApiError::new(
            StatusCode::CONFLICT,
            "nothing_to_undo",
            "no decision to undo".into(),
            Vec::new(),
        )
    })?;
    let value = before.decision(f).expect("undone feature was decided");
    let changed = api::changes(&before, &prev);
    s.config = prev;
    Ok(Json(UndoResponse {
        undone: Decision {
            feature: before.diagram().name_of(f).to_string(),
            value,
        },
        changed,
        state: snapshot(&s),
    }))
}

async fn get_spec(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SpecQuery>,
) -> Result<Response, ApiError> {
    let session = state.lookup(&id)?;
    let s = session.lock().await;
    let xml = match q.mode.as_deref().unwrap_or("preview") {
        "preview" => emit_preview(&s.config),
        "final" => emit_spec(&s.config).map_err(|_| ApiError::incomplete(&s.config))?,
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown mode `{other}`; use preview or final"
            )))
        }
    };
    Ok((
        [(header::CONTENT_TYPE, "application/xml; charset=utf-8")],
        xml,
    )
        .into_response())
}

async fn post_generate(
    State(state): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<GenerateRequest>, JsonRejection>,
) -> Result<Json<GenerateResponse>, ApiError> {
    let req = body(payload)?;
    let session = state.lookup(&id)?;
    let s = session.lock().await;
    let Some((lib, rules)) = &s.generator else {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "no_generator_inputs",
            "session was created without frames and rules".into(),
            Vec::new(),
        ));
    };
    let c = match req.policy {
        Policy::Strict => match s.config.status() {
            Status::Complete => s.config.clone(),
            Status::Incomplete(_) => return Err(ApiError::incomplete(&s.config)),
        },
        Policy::DefaultOff => s
            .config
            .finalize(FinalizePolicy::DefaultOff)
            .map_err(ApiError::from_config)?,
    };
    let out = state.config.out_root.join(&s.id);
    let generated = generate(&c, lib, rules, &out).map_err(|e| {
        let status = match e {
            GenError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, "generation_failed", e.to_string(), Vec::new())
    })?;
    Ok(Json(GenerateResponse {
        out: out.display().to_string(),
        manifest: generated.manifest,
        skipped: generated.skipped,
    }))
}

async fn delete_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    let mut table = state.sessions.lock().expect("session table");
    state.sweep(&mut table);
    match table.remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown_session(&id)),
    }
}

impl ApiError {
    fn from_config(e: ConfigError) -> Self {
        match e {
            ConfigError::UnknownFeature(f) => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "unknown_feature",
                format!("unknown feature `{f}`"),
                Vec::new(),
            ),
            ConfigError::Conflict(c) => ApiError::new(
                StatusCode::CONFLICT,
                "conflict",
                c.to_string(),
                c.reasons
                    .iter()
                    .map(|r| serde_json::to_value(r).expect("reason"))
                    .collect(),
            ),
            ConfigError::Incomplete(o) => ApiError::new(
                StatusCode::CONFLICT,
                "incomplete",
                "configuration is incomplete".into(),
                o.iter()
                    .map(|o| serde_json::to_value(o).expect("obligation"))
                    .collect(),
            ),
            ConfigError::VoidModel => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "void_model",
                e.to_string(),
                Vec::new(),
            ),
            ConfigError::NoDecision(_) => ApiError::new(
                StatusCode::CONFLICT,
                "no_decision",
                e.to_string(),
                Vec::new(),
            ),
        }
    }

    fn incomplete(c: &Configuration) -> Self {
        let obligations = match c.status() {
            Status::Incomplete(o) => o,
            Status::Complete => Vec::new(),
        };
        Self::from_config(ConfigError::Incomplete(obligations))
    }
}
