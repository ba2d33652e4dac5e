//! Role-based authorization and request auditing.
//!
//! Roles are asserted by the `x-role` header and the caller's id by
//! `x-actor`. Every request under `/v1` is evaluated against the current
//! policy set and leaves exactly one audit entry, whether it was allowed or
//! denied.

use axum::extract::{Request, State};
use axum::http::Method;
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use std::sync::Arc;

use workbench_core::security::Action;
use workbench_core::xai::Redaction;

use crate::error::ApiError;
use crate::state::AppState;

pub const ROLE_HEADER: &str = "x-role";
pub const ACTOR_HEADER: &str = "x-actor";
pub const ANONYMOUS: &str = "anonymous";

/// The authorized caller, available to handlers as an extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Caller {
    pub role: String,
    pub actor: String,
    pub redaction: Redaction,
}

impl Caller {
    /// `role:actor`, the form recorded in the audit log and on events.
    pub fn principal(&self) -> String {
        format!("{}:{}", self.role, self.actor)
    }
}

/// Maps an HTTP method to a policy action.
pub fn action_for(method: &Method) -> Action {
    if method == Method::GET || method == Method::HEAD {
        Action::Read
    } else {
        Action::Write
    }
}

fn header(req: &Request, name: &str) -> Option<String> {
    req.headers()
        .get(name)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
}

pub async fn authorize(
    State(state): State<Arc<AppState>>,
    mut req: Request,
    next: Next,
) -> Response {
    let role = header(&req, ROLE_HEADER).unwrap_or_default();
    let actor = header(&req, ACTOR_HEADER).unwrap_or_else(|| ANONYMOUS.to_string());
    let resource = req.uri().path().to_string();
    let action = action_for(req.method());
    let decision = state.policies.evaluate(&role, &resource, action);
    let principal = format!("{role}:{actor}");

    if !decision.allowed() {
        tracing::info!(%principal, %resource, action = action.as_str(), "denied");
        if let Err(e) = state
            .audit
            .append(&principal, action.as_str(), &resource, "deny:403")
        {
            return ApiError::from(e).into_response();
        }
        return ApiError::forbidden(&role, &resource, action.as_str()).into_response();
    }

    req.extensions_mut().insert(Caller {
        role,
        actor,
        redaction: decision.redaction,
    });
    let response = next.run(req).await;
    let outcome = format!("allow:{}", response.status().as_u16());
    match state
        .audit
        .append(&principal, action.as_str(), &resource, &outcome)
    {
        Ok(_) => response,
        Err(e) => ApiError::from(e).into_response(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_safe_methods_read() {
        assert_eq!(action_for(&Method::GET), Action::Read);
        assert_eq!(action_for(&Method::POST), Action::Write);
        assert_eq!(action_for(&Method::DELETE), Action::Write);
    }
}
