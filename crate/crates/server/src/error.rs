//! Error types and the `{code, message, details}` response body.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;
use thiserror::Error;

use workbench_core::active_learning::ActiveLearningError;
use workbench_core::bus::BusError;
use workbench_core::decision::DecisionError;
use workbench_core::forecasting::ForecastError;
use workbench_core::intention::IntentionError;
use workbench_core::security::SecurityError;
use workbench_core::simulation::SimulationError;
use workbench_core::xai::XaiError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("config parse error: {0}")]
    Parse(String),
}

/// Failures while building the service.
#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Security(#[from] SecurityError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("storage: {0}")]
    Storage(String),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Intention(#[from] IntentionError),
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                details: Value::Null,
            },
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.body.details = details;
        self
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("{what} {id:?} not found"),
        )
        .with_details(serde_json::json!({ "kind": what, "id": id }))
    }

    pub fn conflict(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, code, message)
    }

    pub fn forbidden(role: &str, resource: &str, action: &str) -> Self {
        Self::new(
            StatusCode::FORBIDDEN,
            "forbidden",
            format!("role {role:?} may not {action} {resource}"),
        )
        .with_details(serde_json::json!({ "role": role, "resource": resource, "action": action }))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<BusError> for ApiError {
    fn from(e: BusError) -> Self {
        ApiError::internal(e.to_string())
    }
}

impl From<SecurityError> for ApiError {
    fn from(e: SecurityError) -> Self {
        match e {
            SecurityError::PolicyParse { line, .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "policy_parse", e.to_string())
                    .with_details(serde_json::json!({ "line": line }))
            }
            other => ApiError::internal(other.to_string()),
        }
    }
}

impl From<ForecastError> for ApiError {
    fn from(e: ForecastError) -> Self {
        let code = match &e {
            ForecastError::NoDemand => "no_demand",
            ForecastError::InsufficientHistory { .. } => "insufficient_history",
            ForecastError::Dimension { .. } => "dimension_mismatch",
            ForecastError::ColdModel => "no_model",
            _ => "forecast_error",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl From<SimulationError> for ApiError {
    fn from(e: SimulationError) -> Self {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "scenario_error",
            e.to_string(),
        )
    }
}

impl From<DecisionError> for ApiError {
    fn from(e: DecisionError) -> Self {
        match &e {
            DecisionError::MissingFields(fields) => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "missing_fields",
                e.to_string(),
            )
            .with_details(serde_json::json!({ "fields": fields })),
            DecisionError::UnknownOption(id) => ApiError::not_found("option", id),
            DecisionError::Storage(_) => ApiError::internal(e.to_string()),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<IntentionError> for ApiError {
    fn from(e: IntentionError) -> Self {
        match &e {
            IntentionError::Frame { line, .. } => ApiError::bad_request(e.to_string())
                .with_details(serde_json::json!({ "line": line })),
            IntentionError::Model(_) => ApiError::internal(e.to_string()),
            _ => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "intention_error",
                e.to_string(),
            ),
        }
    }
}

impl From<ActiveLearningError> for ApiError {
    fn from(e: ActiveLearningError) -> Self {
        match &e {
            ActiveLearningError::UnknownTask(id) => ApiError::not_found("task", id),
            ActiveLearningError::NotLeased(_) => ApiError::conflict("not_leased", e.to_string()),
            ActiveLearningError::LeaseExpired(_) => {
                ApiError::conflict("lease_expired", e.to_string())
            }
            _ => ApiError::internal(e.to_string()),
        }
    }
}

impl From<XaiError> for ApiError {
    fn from(e: XaiError) -> Self {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "explanation_unavailable",
            e.to_string(),
        )
    }
}
