//! HTTP front end of [`AssistantService`].
//!
//! Bodies are JSON. Events use the trace-document event fields without
//! `seq`; errors are `{"error": code, "message": text}` plus `violations`
//! for an invalid draft.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use clover_core::schema::Violation;
use clover_core::{AssistantService, CorpusId, CorpusStats, DesignAction, EventResponse, ServiceError, SessionState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSession {
    pub user: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Completed {
    pub corpus_id: CorpusId,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionNotActive { .. } => StatusCode::CONFLICT,
            ServiceError::EmptyUser => StatusCode::BAD_REQUEST,
            ServiceError::InvalidDraft(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Corpus(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let violations = match &self.0 {
            ServiceError::InvalidDraft(v) => v.clone(),
            _ => Vec::new(),
        };
        let body = ErrorBody {
            error: self.0.code().to_string(),
            message: self.0.to_string(),
            violations,
        };
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<AssistantService>>;

async fn create_session(State(svc): Shared, Json(req): Json<CreateSession>) -> Result<impl IntoResponse, ApiError> {
    let session = svc.create_session(&req.user)?;
    Ok((StatusCode::CREATED, Json(SessionCreated { session })))
}

async fn post_event(
    State(svc): Shared,
    Path(id): Path<String>,
    Json(action): Json<DesignAction>,
) -> Result<Json<EventResponse>, ApiError> {
    Ok(Json(svc.post_event(&id, &action)?))
}

async fn get_session(State(svc): Shared, Path(id): Path<String>) -> Result<Json<SessionState>, ApiError> {
    Ok(Json(svc.get_state(&id)?))
}

async fn complete(State(svc): Shared, Path(id): Path<String>) -> Result<Json<Completed>, ApiError> {
    let corpus_id = tokio::task::spawn_blocking(move || svc.complete_session(&id))
        .await
        .expect("store task panicked")?;
    Ok(Json(Completed { corpus_id }))
}

async fn corpus_stats(State(svc): Shared) -> Json<CorpusStats> {
    Json(svc.corpus_stats())
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(service: Arc<AssistantService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/complete", post(complete))
        .route("/corpus/stats", get(corpus_stats))
        .route("/health", get(health))
        .with_state(service)
}
