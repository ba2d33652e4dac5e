//! Rolling-origin backtests for demand forecasters.

use serde::{Deserialize, Serialize};

use super::croston::{forecast_croston, CrostonVariant};
use super::spec_metric::{spec_metric, SpecParams};
use super::twofold::{TwofoldConfig, TwofoldModel};
use super::ForecastError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DemandMethod {
    Croston { alpha: f64 },
    Sba { alpha: f64 },
    Twofold(TwofoldConfig),
}

impl DemandMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DemandMethod::Croston { .. } => "croston",
            DemandMethod::Sba { .. } => "sba",
            DemandMethod::Twofold(_) => "twofold",
        }
    }

    /// One-step-ahead point forecast and occurrence probability.
    pub fn forecast_next(&self, history: &[f64]) -> Result<(f64, f64), ForecastError> {
        match self {
            DemandMethod::Croston { alpha } => {
                let f = forecast_croston(history, *alpha, CrostonVariant::Classic)?.forecast();
                Ok((f, if f > 0.0 { 1.0 } else { 0.0 }))
            }
            DemandMethod::Sba { alpha } => {
                let f = forecast_croston(history, *alpha, CrostonVariant::Sba)?.forecast();
                Ok((f, if f > 0.0 { 1.0 } else { 0.0 }))
            }
            DemandMethod::Twofold(cfg) => {
                let f = TwofoldModel::fit(history, cfg)?.forecast_next(history)?;
                Ok((f.point, f.occurrence_probability))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub method: String,
    pub actual: Vec<f64>,
    pub forecast: Vec<f64>,
    pub spec: f64,
    /// Share of predicted occurrences (probability >= 0.5) that had demand.
    pub occurrence_precision: Option<f64>,
}

/// Refits on `q[..t]` and forecasts `q[t]` for every `t >= warmup`.
pub fn backtest(
    quantities: &[f64],
    method: &DemandMethod,
    warmup: usize,
    spec: SpecParams,
) -> Result<BacktestReport, ForecastError> {
    if warmup >= quantities.len() {
        return Err(ForecastError::InsufficientHistory {
            needed: warmup + 1,
            got: quantities.len(),
        });
    }
    let mut forecast = Vec::new();
    let (mut predicted, mut hits) = (0usize, 0usize);
    for t in warmup..quantities.len() {
        let (point, p_occ) = match method.forecast_next(&quantities[..t]) {
            Ok(v) => v,
            Err(ForecastError::NoDemand) => (0.0, 0.0),
            Err(e) => return Err(e),
        };
        if p_occ >= 0.5 {
            predicted += 1;
            if quantities[t] > 0.0 {
                hits += 1;
            }
        }
        forecast.push(point);
    }
    let actual = quantities[warmup..].to_vec();
    let spec_value = spec_metric(&actual, &forecast, spec)?;
    Ok(BacktestReport {
        method: method.name().to_string(),
        actual,
        forecast,
        spec: spec_value,
        occurrence_precision: (predicted > 0).then(|| hits as f64 / predicted as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backtest_lengths_and_precision() {
        let q: Vec<f64> = (0..40)
            .map(|t| if t % 4 == 3 { 8.0 } else { 0.0 })
            .collect();
        let croston = backtest(
            &q,
            &DemandMethod::Croston { alpha: 0.1 },
            12,
            SpecParams::default(),
        )
        .unwrap();
        assert_eq!(croston.forecast.len(), 28);
        assert!((croston.occurrence_precision.unwrap() - 0.25).abs() < 1e-12);
        let twofold = backtest(
            &q,
            &DemandMethod::Twofold(TwofoldConfig::default()),
            12,
            SpecParams::default(),
        )
        .unwrap();
        assert!(twofold.occurrence_precision.unwrap() > croston.occurrence_precision.unwrap());
    }
}
