//! HTTP transport for the query protocol.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use ppm_core::service::{ModelInfo, QueryRequest, Registry, ServiceError};

#[derive(Serialize)]
struct Health {
    status: &'static str,
    models: usize,
}

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/predict", post(predict))
        .route("/models", get(models))
        .route("/health", get(health))
        .with_state(registry)
}

fn error(e: ServiceError) -> Response {
    let status = match e {
        ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
        ServiceError::UnknownModel(_) => StatusCode::NOT_FOUND,
    };
    (status, Json(e.body())).into_response()
}

async fn predict(State(registry): State<Arc<Registry>>, body: Bytes) -> Response {
    let req: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(ServiceError::BadRequest(format!("malformed request: {e}"))),
    };
    match registry.answer(&req) {
        Ok(r) => Json(r).into_response(),
        Err(e) => error(e),
    }
}

async fn models(State(registry): State<Arc<Registry>>) -> Json<Vec<ModelInfo>> {
    Json(registry.models())
}

async fn health(State(registry): State<Arc<Registry>>) -> Json<Health> {
    Json(Health {
        status: "ok",
        models: registry.models().len(),
    })
}
