//! Query-strategy scores: informativeness (uncertainty and committee
//! disagreement), representativeness and diversity.

use serde::{Deserialize, Serialize};

use super::ActiveLearningError;
use crate::types::check_simplex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Random,
    LeastConfidence,
    Margin,
    Entropy,
    QbcVoteEntropy,
    Combined,
}

impl StrategyName {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::Random => "random",
            StrategyName::LeastConfidence => "least_confidence",
            StrategyName::Margin => "margin",
            StrategyName::Entropy => "entropy",
            StrategyName::QbcVoteEntropy => "qbc_vote_entropy",
            StrategyName::Combined => "combined",
        }
    }
}

impl std::str::FromStr for StrategyName {
    type Err = ActiveLearningError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "random" => StrategyName::Random,
            "least_confidence" => StrategyName::LeastConfidence,
            "margin" => StrategyName::Margin,
            "entropy" | "uncertainty" => StrategyName::Entropy,
            "qbc_vote_entropy" | "qbc" => StrategyName::QbcVoteEntropy,
            "combined" => StrategyName::Combined,
            other => {
                return Err(ActiveLearningError::InvalidParams(format!(
                    "unknown strategy {other:?}"
                )))
            }
        })
    }
}

/// Which uncertainty measure feeds informativeness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Uncertainty {
    LeastConfidence,
    Margin,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub name: StrategyName,
    /// Weights of informativeness, representativeness and diversity in the
    /// combined score.
    pub weights: (f64, f64, f64),
    pub committee_size: usize,
    pub stream_threshold: f64,
    /// Maximum queries per stream horizon.
    pub budget: usize,
    /// Kernel width for representativeness.
    pub sigma: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            name: StrategyName::Entropy,
            weights: (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
            committee_size: 3,
            stream_threshold: 0.5,
            budget: 100,
            sigma: 1.0,
        }
    }
}

impl StrategyParams {
    pub fn named(name: StrategyName) -> Self {
        Self {
            name,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ActiveLearningError> {
        let (a, b, g) = self.weights;
        if [a, b, g].iter().any(|w| !(*w >= 0.0)) || ((a + b + g) - 1.0).abs() > 1e-9 {
            return Err(ActiveLearningError::InvalidParams(format!(
                "combined weights must be nonnegative and sum to 1, got ({a}, {b}, {g})"
            )));
        }
        if self.name == StrategyName::QbcVoteEntropy && self.committee_size < 2 {
            return Err(ActiveLearningError::InvalidParams(
                "committee needs at least 2 members".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.stream_threshold) {
            return Err(ActiveLearningError::InvalidParams(format!(
                "stream threshold {} outside [0,1]",
                self.stream_threshold
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(ActiveLearningError::InvalidParams(
                "kernel width must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn least_confidence(p: &[f64]) -> f64 {
    1.0 - p.iter().copied().fold(f64::MIN, f64::max)
}

pub fn margin(p: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::MIN, f64::MIN);
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    1.0 - (first - second)
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy_nats(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Entropy normalized by `ln K`.
pub fn normalized_entropy(p: &[f64]) -> f64 {
    entropy_nats(p) / (p.len() as f64).ln()
}

/// Uncertainty of a simplex prediction, in `[0, 1]`.
pub fn score_informativeness(p: &[f64], kind: Uncertainty) -> Result<f64, ActiveLearningError> {
    if p.len() < 2 {
        return Err(ActiveLearningError::InvalidPrediction(
            "need at least 2 classes".into(),
        ));
    }
    check_simplex(p).map_err(|e| ActiveLearningError::InvalidPrediction(e.to_string()))?;
    let v = match kind {
        Uncertainty::LeastConfidence => least_confidence(p),
        Uncertainty::Margin => margin(p),
        Uncertainty::Entropy => normalized_entropy(p),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Vote entropy in nats over committee argmax votes.
pub fn vote_entropy(votes: &[usize], n_classes: usize) -> f64 {
    if votes.is_empty() {
        return 0.0;
    }
    let mut counts = vec![0usize; n_classes.max(votes.iter().max().map_or(0, |m| m + 1))];
    for &v in votes {
        counts[v] += 1;
    }
    let c = votes.len() as f64;
    -counts
        .iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let f = n as f64 / c;
            f * f.ln()
        })
        .sum::<f64>()
}

/// Vote entropy rescaled by its maximum `ln min(C, K)` to `[0, 1]`.
pub fn normalized_vote_entropy(votes: &[usize], n_classes: usize) -> f64 {
    let cap = votes.len().min(n_classes);
    if cap < 2 {
        return 0.0;
    }
    (vote_entropy(votes, n_classes) / (cap as f64).ln()).clamp(0.0, 1.0)
}

/// Committee predictions for one sample, reduced to vote entropy (nats).
pub fn score_qbc(committee_predictions: &[Vec<f64>]) -> Result<f64, ActiveLearningError> {
    if committee_predictions.len() < 2 {
        return Err(ActiveLearningError::InvalidParams(
            "committee needs at least 2 members".into(),
        ));
    }
    let k = committee_predictions[0].len();
    if committee_predictions.iter().any(|p| p.len() != k) {
        return Err(ActiveLearningError::CommitteeMismatch);
    }
    let votes: Vec<usize> = committee_predictions
        .iter()
        .map(|p| crate::types::argmax(p))
        .collect();
    Ok(vote_entropy(&votes, k))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Largest pairwise Euclidean distance within the pool.
pub fn pool_diameter(pool: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..pool.len() {
        for j in i + 1..pool.len() {
            best = best.max(sq_dist(&pool[i], &pool[j]));
        }
    }
    best.sqrt()
}

/// Mean Gaussian-kernel similarity to the pool.
pub fn representativeness(x: &[f64], pool: &[Vec<f64>], sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    pool.iter()
        .map(|p| (-sq_dist(x, p) / s2).exp())
        .sum::<f64>()
        / pool.len() as f64
}

/// Distance to the closest labeled point over the pool diameter, clamped to
/// `[0, 1]`. No labeled points yet means maximal diversity.
pub fn diversity(x: &[f64], labeled: &[Vec<f64>], diameter: f64) -> f64 {
    if labeled.is_empty() {
        return 1.0;
    }
    let nearest = labeled
        .iter()
        .map(|l| sq_dist(x, l))
        .fold(f64::INFINITY, f64::min)
        .sqrt();
    if diameter <= 0.0 {
        return if nearest > 0.0 { 1.0 } else { 0.0 };
    }
    (nearest / diameter).clamp(0.0, 1.0)
}

/// Representativeness and diversity of `x` relative to the unlabeled pool
/// and the labeled set.
pub fn score_repr_div(
    x: &[f64],
    pool: &[Vec<f64>],
    labeled: &[Vec<f64>],
    sigma: f64,
) -> Result<(f64, f64), ActiveLearningError> {
    if pool.is_empty() {
        return Err(ActiveLearningError::EmptyPool);
    }
    if !(sigma > 0.0) {
        return Err(ActiveLearningError::InvalidParams(format!(
            "kernel width {sigma} must be positive"
        )));
    }
    Ok((
        representativeness(x, pool, sigma),
        diversity(x, labeled, pool_diameter(pool)),
    ))
}
