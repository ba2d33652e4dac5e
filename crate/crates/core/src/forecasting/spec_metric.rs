//! Stock-keeping-oriented Prediction Error Costs (SPEC).
//!
//! For every period `t` and every earlier period `i <= t`, unmet demand from
//! period `i` (opportunity cost, weight `alpha1`) or stock bought in period
//! `i` but still on the shelf (stock-keeping cost, weight `alpha2`) is
//! charged once per period it stays outstanding, i.e. `t - i + 1` times:
//!
//! ```text
//! SPEC = 1/n * sum_t sum_{i<=t} max(0,
//!          alpha1 * min(y_i, Y_i - F_t),
//!          alpha2 * min(f_i, F_i - Y_t)) * (t - i + 1)
//! ```
//!
//! where `Y` and `F` are cumulative actuals and forecasts.

use serde::{Deserialize, Serialize};

use super::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecParams {
    /// Opportunity-cost weight.
    pub alpha1: f64,
    /// Stock-keeping-cost weight.
    pub alpha2: f64,
}

impl Default for SpecParams {
    fn default() -> Self {
        Self {
            alpha1: 0.5,
            alpha2: 0.5,
        }
    }
}

impl SpecParams {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self, ForecastError> {
        if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1 + alpha2 > 0.0) {
            return Err(ForecastError::InvalidConfig(format!(
                "SPEC weights must be nonnegative with a positive sum, got ({alpha1}, {alpha2})"
            )));
        }
        Ok(Self { alpha1, alpha2 })
    }
}

pub fn spec_metric(
    actual: &[f64],
    forecast: &[f64],
    params: SpecParams,
) -> Result<f64, ForecastError> {
    if actual.len() != forecast.len() || actual.is_empty() {
        return Err(ForecastError::InvalidInput(format!(
            "SPEC needs equal nonempty lengths, got {} and {}",
            actual.len(),
            forecast.len()
        )));
    }
    if actual
        .iter()
        .chain(forecast)
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(ForecastError::InvalidInput(
            "SPEC inputs must be nonnegative".into(),
        ));
    }
    let cum = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    };
    let cy = cum(actual);
    let cf = cum(forecast);
    let n = actual.len();
    let mut total = 0.0;
    for t in 0..n {
        for i in 0..=t {
            let opportunity = params.alpha1 * actual[i].min(cy[i] - cf[t]);
            let stock = params.alpha2 * forecast[i].min(cf[i] - cy[t]);
            total += opportunity.max(stock).max(0.0) * (t - i + 1) as f64;
        }
    }
    Ok(total / n as f64)
}
