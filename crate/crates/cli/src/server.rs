//! HTTP review service.
//!
//! All endpoints require the shared `X-Review-Token` header. The store sits
//! behind one mutex, so assignment and log appends are serialized.

use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use axum::extract::{Query, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use medcorpus_core::review::{ReviewError, ReviewStore, Submission, TaskKind};

pub const TOKEN_HEADER: &str = "x-review-token";

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<ReviewStore>>,
    token: Arc<str>,
}

impl AppState {
    pub fn new(store: ReviewStore, token: impl Into<Arc<str>>) -> Self {
        Self {
            store: Arc::new(Mutex::new(store)),
            token: token.into(),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ReviewStore> {
        // A panic inside a handler leaves the store consistent: every
        // mutation is validated before it is applied.
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let status = match &e {
            ReviewError::Invalid(_) | ReviewError::Input(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ReviewError::UnknownCase(_) => StatusCode::NOT_FOUND,
            ReviewError::NotServed { .. } | ReviewError::Conflict { .. } => StatusCode::CONFLICT,
            ReviewError::Io(_) | ReviewError::Parse { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/submissions", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state)
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    let ok = req
        .headers()
        .get(TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|t| t == &*state.token);
    if !ok {
        return ApiError(StatusCode::UNAUTHORIZED, "missing or wrong X-Review-Token".into()).into_response();
    }
    next.run(req).await
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: String,
    kind: String,
}

fn parse_kind(s: &str) -> Result<TaskKind, ApiError> {
    s.parse().map_err(|e: ReviewError| ApiError(StatusCode::BAD_REQUEST, e.to_string()))
}

async fn next_task(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Result<Response, ApiError> {
    let kind = parse_kind(&q.kind)?;
    if q.annotator.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "annotator must not be empty".into()));
    }
    let task = state.lock().next_task(&q.annotator, kind)?;
    Ok(match task {
        Some(t) => Json(t).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn submit(State(state): State<AppState>, Json(mut sub): Json<Submission>) -> Result<Response, ApiError> {
    if sub.timestamp.is_none() {
        sub.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    }
    state.lock().submit(sub.clone())?;
    Ok((StatusCode::CREATED, Json(sub)).into_response())
}

async fn progress(State(state): State<AppState>) -> Response {
    Json(state.lock().progress()).into_response()
}

#[derive(Deserialize)]
struct ExportQuery {
    kind: Option<String>,
}

async fn export(State(state): State<AppState>, Query(q): Query<ExportQuery>) -> Result<Response, ApiError> {
    let kind = match q.kind.as_deref() {
        Some(k) => parse_kind(k)?,
        None => TaskKind::Ranking,
    };
    let body = export_body(&state.lock(), kind).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let mut resp = body.into_response();
    resp.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static("application/x-ndjson"));
    Ok(resp)
}

/// JSON-lines export: ranking records or verification verdicts.
pub fn export_body(store: &ReviewStore, kind: TaskKind) -> Result<String> {
    let mut out = String::new();
    let mut push = |v: String| {
        out.push_str(&v);
        out.push('\n');
    };
    match kind {
        TaskKind::Ranking => {
            for r in store.export_rankings()? {
                push(serde_json::to_string(&r)?);
            }
        }
        TaskKind::Verification => {
            for r in store.export_verifications() {
                push(serde_json::to_string(&r)?);
            }
        }
    }
    Ok(out)
}

/// Bind and serve until Ctrl-C.
pub fn serve(store: ReviewStore, token: String, bind: &str, port: u16) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let addr = format!("{bind}:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("cannot listen on {addr}"))?;
        log::info!("review service on http://{}", listener.local_addr()?);
        axum::serve(listener, router(AppState::new(store, token)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
