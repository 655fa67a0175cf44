use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::catalog::GarmentListing;
use crate::error::ApiError;
use crate::model::{JobRecord, SessionView};
use crate::state::AppState;

/// Upper bound on request bodies; uploads are checked against the pixel
/// limit separately.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

type Shared = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/tryon", post(submit_tryon))
        .route("/api/sessions/{id}/continue", post(continue_from))
        .route("/api/garments", get(list_garments))
        .route("/api/jobs/{id}", get(get_job))
        .route("/api/images/{id}", get(get_image))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TryOnRequest {
    pub garment_id: String,
    pub size: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SubmittedJob {
    pub job_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ContinueRequest {
    pub result_id: String,
}

async fn health(State(state): Shared) -> impl IntoResponse {
    Json(json!({
        "status": if state.is_shutting_down() { "draining" } else { "ok" },
        "garments": state.catalog.len(),
    }))
}

async fn create_session(
    State(state): Shared,
    mut form: Multipart,
) -> Result<impl IntoResponse, ApiError> {
    let mut image = None;
    let mut top = None;
    let mut bottom = None;
    while let Some(field) = form
        .next_field()
        .await
        .map_err(|e| ApiError::BadRequest(e.body_text()))?
    {
        let name = field.name().unwrap_or_default().to_string();
        let data = field
            .bytes()
            .await
            .map_err(|e| ApiError::BadRequest(e.body_text()))?;
        match name.as_str() {
            "image" => image = Some(data),
            "true_top_size" => top = Some(String::from_utf8_lossy(&data).into_owned()),
            "true_bottom_size" => bottom = Some(String::from_utf8_lossy(&data).into_owned()),
            _ => {}
        }
    }
    let session_id = tokio::task::spawn_blocking(move || {
        state.create_session(image.as_deref(), top.as_deref(), bottom.as_deref())
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(CreatedSession { session_id })))
}

async fn get_session(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    state.get_session(&id).map(Json)
}

async fn list_garments(State(state): Shared) -> Json<Vec<GarmentListing>> {
    Json(state.list_garments())
}

async fn submit_tryon(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<TryOnRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let job_id = state.submit_tryon(&id, &req.garment_id, &req.size)?;
    Ok((StatusCode::ACCEPTED, Json(SubmittedJob { job_id })))
}

async fn get_job(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<Json<JobRecord>, ApiError> {
    state.get_job(&id).map(Json)
}

async fn continue_from(
    State(state): Shared,
    Path(id): Path<String>,
    body: Result<Json<ContinueRequest>, JsonRejection>,
) -> Result<StatusCode, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    state.continue_from(&id, &req.result_id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn get_image(
    State(state): Shared,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let png = tokio::task::spawn_blocking(move || state.image_png(&id))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "public, max-age=31536000, immutable"),
        ],
        png,
    ))
}
