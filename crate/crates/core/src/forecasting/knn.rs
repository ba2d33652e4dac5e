use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::ForecastError;

/// k-nearest-neighbors over a sliding window of the most recent labeled
/// samples. Votes are weighted by `1 / (d + 1e-9)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingKnn {
    k: usize,
    window: usize,
    n_classes: usize,
    memory: VecDeque<(Vec<f64>, usize)>,
    seen: u64,
}

const VOTE_EPS: f64 = 1e-9;

impl StreamingKnn {
    pub fn new(k: usize, window: usize, n_classes: usize) -> Result<Self, ForecastError> {
        if k == 0 || window < k {
            return Err(ForecastError::InvalidConfig(format!(
                "streaming kNN needs k >= 1 and window >= k (k={k}, window={window})"
            )));
        }
        Ok(Self {
            k,
            window,
            n_classes,
            memory: VecDeque::with_capacity(window),
            seen: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.memory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memory.is_empty()
    }

    /// Total labeled samples ever observed, including evicted ones.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn dim(&self) -> Option<usize> {
        self.memory.front().map(|(x, _)| x.len())
    }

    pub fn update(&mut self, x: Vec<f64>, label: usize) -> Result<(), ForecastError> {
        if label >= self.n_classes {
            return Err(ForecastError::InvalidConfig(format!(
                "label {label} out of range"
            )));
        }
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(ForecastError::Dimension {
                    expected: d,
                    got: x.len(),
                });
            }
        }
        if self.memory.len() == self.window {
            self.memory.pop_front();
        }
        self.memory.push_back((x, label));
        self.seen += 1;
        Ok(())
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        let d = self.dim().ok_or(ForecastError::ColdModel)?;
        if d != x.len() {
            return Err(ForecastError::Dimension {
                expected: d,
                got: x.len(),
            });
        }
        let mut dists: Vec<(f64, usize)> = self
            .memory
            .iter()
            .map(|(m, y)| {
                let d2: f64 = m.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
                (d2.sqrt(), *y)
            })
            .collect();
        // stable: equal distances keep insertion order
        dists.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut votes = vec![0.0; self.n_classes];
        for (dist, y) in dists.iter().take(self.k) {
            votes[*y] += 1.0 / (dist + VOTE_EPS);
        }
        let total: f64 = votes.iter().sum();
        votes.iter_mut().for_each(|v| *v /= total);
        Ok(votes)
    }
}
