//! Server-sent event stream over bus topics.
//!
//! Each connection gets its own bus subscription, taken before the response
//! starts, and a bridge thread that forwards events into the async stream.
//! The stream opens with a `ready` event.

use axum::extract::State;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;
use tokio::sync::mpsc;

use workbench_core::bus::Event;

use crate::error::ApiError;
use crate::routes::ApiQuery;
use crate::state::AppState;

/// Topics streamed when the client names none.
pub const DEFAULT_STREAM_TOPICS: [&str; 2] = ["queries", "intent"];

const BRIDGE_POLL: Duration = Duration::from_millis(200);
const BRIDGE_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventsQuery {
    /// Comma-separated topic names.
    pub topics: Option<String>,
}

fn to_sse(ev: &Event) -> SseEvent {
    SseEvent::default()
        .event(ev.topic.clone())
        .id(ev.seq.to_string())
        .json_data(ev)
        .unwrap_or_else(|_| SseEvent::default().comment("unencodable event"))
}

pub async fn get_events(
    State(state): State<Arc<AppState>>,
    ApiQuery(q): ApiQuery<EventsQuery>,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let topics: Vec<String> = match &q.topics {
        Some(t) => t
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect(),
        None => DEFAULT_STREAM_TOPICS.map(String::from).to_vec(),
    };
    let known = state.bus.topics();
    if topics.is_empty() || topics.iter().any(|t| !known.contains(t)) {
        return Err(
            ApiError::bad_request("unknown or empty topic list").with_details(serde_json::json!({
                "requested": topics,
                "topics": known,
            })),
        );
    }
    let refs: Vec<&str> = topics.iter().map(String::as_str).collect();
    let subscription = state.bus.subscribe_many(&refs)?;
    let (tx, rx) = mpsc::channel::<Event>(BRIDGE_CAPACITY);
    std::thread::Builder::new()
        .name("sse-bridge".into())
        .spawn(move || loop {
            match subscription.recv_timeout(BRIDGE_POLL) {
                Some(ev) => {
                    if tx.blocking_send(ev).is_err() {
                        break;
                    }
                }
                None => {
                    if tx.is_closed() {
                        break;
                    }
                }
            }
        })
        .map_err(|e| ApiError::internal(e.to_string()))?;

    let ready = SseEvent::default()
        .event("ready")
        .json_data(serde_json::json!({ "topics": topics }))
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let events = stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|ev| (Ok(to_sse(&ev)), rx))
    });
    let body = stream::once(async move { Ok(ready) }).chain(events);
    Ok(Sse::new(body).keep_alive(KeepAlive::default()))
}
