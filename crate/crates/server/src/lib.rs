//! HTTP/JSON service for the workbench: the `/v1` API, the `/v1/events`
//! stream, role-based authorization with an audit trail, and the active
//! learning loop that feeds the annotation queue.

pub mod auth;
pub mod cli;
pub mod config;
pub mod error;
pub mod events;
pub mod quality;
pub mod routes;
pub mod state;

use axum::extract::DefaultBodyLimit;
use axum::middleware;
use axum::routing::{get, post};
use axum::Router;
use std::sync::Arc;

pub use config::Config;
pub use error::{ApiError, ErrorBody, StartupError};
pub use state::AppState;

/// The full service router with every `/v1` route behind authorization.
pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/samples", post(routes::post_samples))
        .route("/queue/next", get(routes::get_queue_next))
        .route("/labels", post(routes::post_labels))
        .route("/predictions/{id}", get(routes::get_prediction))
        .route("/explanations/{id}", get(routes::get_explanation))
        .route("/forecasts/{product_id}", get(routes::get_forecast))
        .route("/whatif", post(routes::post_whatif))
        .route("/options", get(routes::get_options))
        .route("/feedback", post(routes::post_feedback))
        .route("/knowledge", post(routes::post_knowledge))
        .route("/intent/command", get(routes::get_intent_command))
        .route("/stream/metrics", get(routes::get_stream_metrics))
        .route("/policies", post(routes::post_policies))
        .route("/audit", get(routes::get_audit))
        .route("/events", get(events::get_events))
        .fallback(routes::not_found)
        .layer(middleware::from_fn_with_state(
            state.clone(),
            auth::authorize,
        ))
        .layer(DefaultBodyLimit::max(state.config.server.max_body_bytes))
        .with_state(state);
    Router::new().nest("/v1", api).fallback(routes::not_found)
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: &str) -> Result<(), StartupError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| StartupError::Bind {
            addr: addr.to_string(),
            message: e.to_string(),
        })?;
    let local = listener
        .local_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| addr.to_string());
    tracing::info!(addr = %local, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| StartupError::Bind {
            addr: local,
            message: e.to_string(),
        })
}
