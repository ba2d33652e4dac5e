//! Event bus and storage layer.
//!
//! Modules talk to each other only through topics on the [`EventBus`] or
//! through the [`DocumentStore`]. Every event is written to the log before
//! any subscriber sees it, and per-topic delivery order equals append order.

mod log;
mod store;

pub use log::{EventLog, FileLog, MemoryLog};
pub use store::{DocumentStore, StoreError};

use crate::types::{now_ms, Timestamp};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::HashMap;
use std::path::Path;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Mutex;
use std::time::Duration;
use thiserror::Error;

/// Topics wired at startup; the module interaction graph is static.
pub const DEFAULT_TOPICS: [&str; 11] = [
    "samples",
    "queries",
    "labels",
    "predictions",
    "explanations",
    "options",
    "feedback",
    "scenarios",
    "intent",
    "policy",
    "audit",
];

#[derive(Debug, Error)]
pub enum BusError {
    #[error("unknown topic {0:?}")]
    UnknownTopic(String),
    #[error("event log storage failed: {0}")]
    Storage(String),
    #[error("malformed event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub topic: String,
    pub seq: u64,
    pub actor: String,
    pub ts: Timestamp,
    pub payload: Value,
}

/// Folds events into module state. Rebuilding from the same log must give
/// the same snapshot every time.
pub trait Projection {
    fn apply(&mut self, event: &Event);
}

struct Inner {
    seqs: HashMap<String, u64>,
    subscribers: HashMap<String, Vec<Sender<Event>>>,
    log: Box<dyn EventLog>,
}

/// Topic-based publish/subscribe bus backed by an append-only log.
pub struct EventBus {
    inner: Mutex<Inner>,
}

impl EventBus {
    /// In-memory bus over the default topics.
    pub fn in_memory() -> Self {
        Self::with_log(&DEFAULT_TOPICS, Box::new(MemoryLog::default()))
            .expect("memory log never fails to load")
    }

    /// Opens (or creates) a line-delimited log file and restores per-topic
    /// sequence counters from it.
    pub fn open(path: impl AsRef<Path>, topics: &[&str]) -> Result<Self, BusError> {
        Self::with_log(topics, Box::new(FileLog::open(path)?))
    }

    pub fn with_log(topics: &[&str], log: Box<dyn EventLog>) -> Result<Self, BusError> {
        let mut seqs: HashMap<String, u64> = topics.iter().map(|t| (t.to_string(), 0)).collect();
        for event in log.events()? {
            if let Some(seq) = seqs.get_mut(&event.topic) {
                *seq = (*seq).max(event.seq);
            }
        }
        Ok(Self {
            inner: Mutex::new(Inner {
                seqs,
                subscribers: HashMap::new(),
                log,
            }),
        })
    }

    pub fn topics(&self) -> Vec<String> {
        let inner = self.lock();
        let mut topics: Vec<String> = inner.seqs.keys().cloned().collect();
        topics.sort();
        topics
    }

    /// Appends an event and delivers it to every subscriber of `topic`.
    /// If the log append fails, nothing is delivered and the sequence
    /// counter does not advance.
    pub fn publish(&self, topic: &str, payload: Value, actor: &str) -> Result<Event, BusError> {
        let mut inner = self.lock();
        let next = match inner.seqs.get(topic) {
            Some(seq) => seq + 1,
            None => return Err(BusError::UnknownTopic(topic.to_string())),
        };
        let event = Event {
            topic: topic.to_string(),
            seq: next,
            actor: actor.to_string(),
            ts: now_ms(),
            payload,
        };
        inner.log.append(&event)?;
        inner.seqs.insert(topic.to_string(), next);
        if let Some(subs) = inner.subscribers.get_mut(topic) {
            subs.retain(|tx| tx.send(event.clone()).is_ok());
        }
        Ok(event)
    }

    pub fn subscribe(&self, topic: &str) -> Result<Subscription, BusError> {
        self.subscribe_many(&[topic])
    }

    /// One cursor over several topics. Order is preserved within each topic.
    pub fn subscribe_many(&self, topics: &[&str]) -> Result<Subscription, BusError> {
        let mut inner = self.lock();
        if let Some(t) = topics.iter().find(|t| !inner.seqs.contains_key(**t)) {
            return Err(BusError::UnknownTopic(t.to_string()));
        }
        let (tx, rx) = mpsc::channel();
        for t in topics {
            inner
                .subscribers
                .entry(t.to_string())
                .or_default()
                .push(tx.clone());
        }
        Ok(Subscription { rx })
    }

    /// Every stored event in append order.
    pub fn replay(&self) -> Result<Vec<Event>, BusError> {
        self.lock().log.events()
    }

    pub fn events(&self, topic: &str) -> Result<Vec<Event>, BusError> {
        Ok(self
            .replay()?
            .into_iter()
            .filter(|e| e.topic == topic)
            .collect())
    }

    pub fn rebuild<P: Projection + Default>(&self) -> Result<P, BusError> {
        let mut state = P::default();
        for event in self.replay()? {
            state.apply(&event);
        }
        Ok(state)
    }

    pub fn last_seq(&self, topic: &str) -> Option<u64> {
        self.lock().seqs.get(topic).copied()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Independent cursor over one or more topics.
pub struct Subscription {
    rx: Receiver<Event>,
}

impl Subscription {
    pub fn try_recv(&self) -> Option<Event> {
        self.rx.try_recv().ok()
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Option<Event> {
        self.rx.recv_timeout(timeout).ok()
    }

    /// Blocks until the next event; `None` once the bus is gone.
    pub fn recv(&self) -> Option<Event> {
        self.rx.recv().ok()
    }

    pub fn drain(&self) -> Vec<Event> {
        std::iter::from_fn(|| self.try_recv()).collect()
    }
}
