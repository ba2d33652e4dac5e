//! Croston's method and the Syntetos-Boylan bias correction.

use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrostonVariant {
    Classic,
    /// Multiplies the classic forecast by `1 - alpha / 2`.
    Sba,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrostonFit {
    pub alpha: f64,
    pub variant: CrostonVariant,
    /// Smoothed nonzero demand size.
    pub size_level: f64,
    /// Smoothed inter-demand interval in periods.
    pub interval_level: f64,
    pub demands_seen: usize,
}

impl CrostonFit {
    /// Flat per-period forecast.
    pub fn forecast(&self) -> f64 {
        let base = self.size_level / self.interval_level;
        match self.variant {
            CrostonVariant::Classic => base,
            CrostonVariant::Sba => base * (1.0 - self.alpha / 2.0),
        }
    }

    pub fn horizon(&self, h: usize) -> Vec<f64> {
        vec![self.forecast(); h]
    }
}

/// Smooths nonzero sizes and inter-demand intervals, updating only at
/// demand occurrences. Sizes start at the first nonzero demand; intervals
/// start at the gap between the first two demands. With a single demand the
/// interval starts at the number of periods from that demand to the end of
/// the history. Leading zeros never affect the result.
pub fn forecast_croston(
    quantities: &[f64],
    alpha: f64,
    variant: CrostonVariant,
) -> Result<CrostonFit, ForecastError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ForecastError::InvalidConfig(format!(
            "alpha must be in (0,1), got {alpha}"
        )));
    }
    if let Some(q) = quantities.iter().find(|q| !q.is_finite() || **q < 0.0) {
        return Err(ForecastError::InvalidInput(format!(
            "negative or non-finite quantity {q}"
        )));
    }
    let demands: Vec<(usize, f64)> = quantities
        .iter()
        .enumerate()
        .filter(|(_, &q)| q > 0.0)
        .map(|(i, &q)| (i, q))
        .collect();
    let Some(&(first_at, first_size)) = demands.first() else {
        return Err(ForecastError::NoDemand);
    };
    let mut size = first_size;
    let mut interval = match demands.get(1) {
        Some(&(second_at, _)) => (second_at - first_at) as f64,
        None => (quantities.len() - first_at) as f64,
    };
    for pair in demands.windows(2) {
        let gap = (pair[1].0 - pair[0].0) as f64;
        size += alpha * (pair[1].1 - size);
        interval += alpha * (gap - interval);
    }
    Ok(CrostonFit {
        alpha,
        variant,
        size_level: size,
        interval_level: interval,
        demands_seen: demands.len(),
    })
}
