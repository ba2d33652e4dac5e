//! Annotation queue with time-bounded leases.

use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use super::ActiveLearningError;
use crate::types::{now_ms, Timestamp};

/// Default lease time-to-live: five minutes.
pub const DEFAULT_LEASE_TTL_MS: i64 = 300_000;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> Timestamp {
        now_ms()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        Self(AtomicI64::new(start))
    }

    pub fn advance(&self, ms: i64) {
        self.0.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> Timestamp {
        self.0.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskState {
    Queued,
    Leased,
    Answered,
    /// Lease ran out; the task sits at the head of the queue again.
    Expired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lease {
    pub annotator_id: String,
    pub deadline: Timestamp,
}

/// Reference to an explanation offered as an annotation hint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintRef {
    pub explanation_id: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTask {
    pub task_id: String,
    pub sample_id: String,
    pub strategy_name: String,
    pub info_score: f64,
    #[serde(default)]
    pub hints: Vec<HintRef>,
    pub state: TaskState,
    pub lease: Option<Lease>,
    pub enqueued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub record_id: String,
    pub task_id: String,
    pub sample_id: String,
    pub annotator_id: String,
    pub label: String,
    pub elapsed_ms: i64,
    /// Kind of hint the annotator saw, if any.
    pub hint_shown: Option<String>,
    pub ts: Timestamp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueCounts {
    pub queued: usize,
    pub leased: usize,
    pub answered: usize,
    pub expired: usize,
    pub total: usize,
}

#[derive(Default)]
struct QueueState {
    tasks: HashMap<String, QueryTask>,
    waiting: VecDeque<String>,
    next_task: u64,
    next_record: u64,
}

/// Linearizable task queue: every operation runs under one lock, so two
/// annotators can never lease the same task.
pub struct AnnotationQueue {
    state: Mutex<QueueState>,
    clock: Arc<dyn Clock>,
    ttl_ms: i64,
}

impl Default for AnnotationQueue {
    fn default() -> Self {
        Self::new(Arc::new(SystemClock), DEFAULT_LEASE_TTL_MS)
    }
}

impl AnnotationQueue {
    pub fn new(clock: Arc<dyn Clock>, ttl_ms: i64) -> Self {
        Self {
            state: Mutex::new(QueueState::default()),
            clock,
            ttl_ms,
        }
    }

    fn lock(&self) -> MutexGuard<'_, QueueState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn expire_overdue(state: &mut QueueState, now: Timestamp) {
        let mut overdue: Vec<(Timestamp, String)> = state
            .tasks
            .values()
            .filter(|t| {
                t.state == TaskState::Leased && t.lease.as_ref().is_some_and(|l| l.deadline < now)
            })
            .map(|t| (t.enqueued_at, t.task_id.clone()))
            .collect();
        // Re-queue older tasks ahead of newer ones.
        overdue.sort();
        for (_, id) in overdue.into_iter().rev() {
            if let Some(task) = state.tasks.get_mut(&id) {
                task.state = TaskState::Expired;
                task.lease = None;
                state.waiting.push_front(id);
            }
        }
    }

    pub fn enqueue(
        &self,
        sample_id: &str,
        strategy_name: &str,
        info_score: f64,
        hints: Vec<HintRef>,
    ) -> QueryTask {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        state.next_task += 1;
        let task = QueryTask {
            task_id: format!("task-{}", state.next_task),
            sample_id: sample_id.to_string(),
            strategy_name: strategy_name.to_string(),
            info_score,
            hints,
            state: TaskState::Queued,
            lease: None,
            enqueued_at: now,
        };
        state.waiting.push_back(task.task_id.clone());
        state.tasks.insert(task.task_id.clone(), task.clone());
        task
    }

    /// Leases the task at the head of the queue, or `None` when nothing waits.
    pub fn lease_next(&self, annotator_id: &str) -> Option<QueryTask> {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        Self::expire_overdue(&mut state, now);
        let id = state.waiting.pop_front()?;
        let task = state.tasks.get_mut(&id)?;
        task.state = TaskState::Leased;
        task.lease = Some(Lease {
            annotator_id: annotator_id.to_string(),
            deadline: now + self.ttl_ms,
        });
        Some(task.clone())
    }

    /// Records the annotator's answer. A lease past its deadline is rejected
    /// and the task goes back to the head of the queue.
    pub fn answer(
        &self,
        task_id: &str,
        annotator_id: &str,
        label: &str,
        elapsed_ms: i64,
        hint_shown: Option<String>,
    ) -> Result<LabelRecord, ActiveLearningError> {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        let task = state
            .tasks
            .get_mut(task_id)
            .ok_or_else(|| ActiveLearningError::UnknownTask(task_id.to_string()))?;
        let lease = match (&task.state, &task.lease) {
            (TaskState::Leased, Some(lease)) => lease.clone(),
            _ => return Err(ActiveLearningError::NotLeased(task_id.to_string())),
        };
        if lease.annotator_id != annotator_id {
            return Err(ActiveLearningError::NotLeased(task_id.to_string()));
        }
        if lease.deadline < now {
            task.state = TaskState::Expired;
            task.lease = None;
            state.waiting.push_front(task_id.to_string());
            return Err(ActiveLearningError::LeaseExpired(task_id.to_string()));
        }
        task.state = TaskState::Answered;
        task.lease = None;
        let sample_id = task.sample_id.clone();
        state.next_record += 1;
        Ok(LabelRecord {
            record_id: format!("label-{}", state.next_record),
            task_id: task_id.to_string(),
            sample_id,
            annotator_id: annotator_id.to_string(),
            label: label.to_string(),
            elapsed_ms,
            hint_shown,
            ts: now,
        })
    }

    /// Gives a leased task back without answering it.
    pub fn release(&self, task_id: &str, annotator_id: &str) -> Result<(), ActiveLearningError> {
        let mut state = self.lock();
        let task = state
            .tasks
            .get_mut(task_id)
            .ok_or_else(|| ActiveLearningError::UnknownTask(task_id.to_string()))?;
        match &task.lease {
            Some(l) if task.state == TaskState::Leased && l.annotator_id == annotator_id => {
                task.state = TaskState::Queued;
                task.lease = None;
                state.waiting.push_front(task_id.to_string());
                Ok(())
            }
            _ => Err(ActiveLearningError::NotLeased(task_id.to_string())),
        }
    }

    pub fn get(&self, task_id: &str) -> Option<QueryTask> {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        Self::expire_overdue(&mut state, now);
        state.tasks.get(task_id).cloned()
    }

    pub fn counts(&self) -> QueueCounts {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        Self::expire_overdue(&mut state, now);
        let mut c = QueueCounts {
            total: state.tasks.len(),
            ..QueueCounts::default()
        };
        for t in state.tasks.values() {
            match t.state {
                TaskState::Queued => c.queued += 1,
                TaskState::Leased => c.leased += 1,
                TaskState::Answered => c.answered += 1,
                TaskState::Expired => c.expired += 1,
            }
        }
        c
    }

    /// Number of tasks waiting to be leased.
    pub fn pending(&self) -> usize {
        let now = self.clock.now_ms();
        let mut state = self.lock();
        Self::expire_overdue(&mut state, now);
        state.waiting.len()
    }
}
