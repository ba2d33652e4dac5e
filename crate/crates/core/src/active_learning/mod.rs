//! Active learning: which unlabeled samples to show a human next, and the
//! queue that hands them out.

pub mod pool;
pub mod queue;
pub mod strategy;
pub mod stream;

use thiserror::Error;

use crate::forecasting::ForecastError;

pub use pool::{pool_scores, select_pool, top_b, PoolContext, PoolSelection};
pub use queue::{
    AnnotationQueue, Clock, HintRef, LabelRecord, Lease, ManualClock, QueryTask, QueueCounts,
    SystemClock, TaskState, DEFAULT_LEASE_TTL_MS,
};
pub use strategy::{
    score_informativeness, score_qbc, score_repr_div, vote_entropy, StrategyName, StrategyParams,
    Uncertainty,
};
pub use stream::{StreamDecision, StreamSelector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActiveLearningError {
    #[error("invalid strategy parameters: {0}")]
    InvalidParams(String),
    #[error("invalid prediction: {0}")]
    InvalidPrediction(String),
    #[error("committee members disagree on the class set")]
    CommitteeMismatch,
    #[error("empty pool")]
    EmptyPool,
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {0} is not leased by this annotator")]
    NotLeased(String),
    #[error("lease on task {0} expired; task re-queued")]
    LeaseExpired(String),
    #[error(transparent)]
    Model(#[from] ForecastError),
}
