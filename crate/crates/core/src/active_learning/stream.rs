//! Stream-based selection under a sliding query budget.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::ActiveLearningError;

/// Number of most recent stream samples the budget applies to.
pub const DEFAULT_HORIZON: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StreamDecision {
    Query,
    Skip,
}

/// Queries a sample when its informativeness reaches `threshold` and fewer
/// than `budget` queries were issued within the last `horizon` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSelector {
    threshold: f64,
    budget: usize,
    horizon: usize,
    recent: VecDeque<bool>,
    used: usize,
}

impl StreamSelector {
    pub fn new(threshold: f64, budget: usize, horizon: usize) -> Result<Self, ActiveLearningError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ActiveLearningError::InvalidParams(format!(
                "threshold {threshold} outside [0,1]"
            )));
        }
        if horizon == 0 {
            return Err(ActiveLearningError::InvalidParams(
                "horizon must be positive".into(),
            ));
        }
        Ok(Self {
            threshold,
            budget,
            horizon,
            recent: VecDeque::with_capacity(horizon),
            used: 0,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.used)
    }

    pub fn decide(&mut self, informativeness: f64) -> StreamDecision {
        if self.recent.len() == self.horizon && self.recent.pop_front() == Some(true) {
            self.used -= 1;
        }
        let query = informativeness >= self.threshold && self.remaining() > 0;
        self.recent.push_back(query);
        if query {
            self.used += 1;
            StreamDecision::Query
        } else {
            StreamDecision::Skip
        }
    }
}
