//! Two-fold intermittent demand forecasting: a binary occurrence classifier
//! over lag and calendar features, combined with a smoothed estimate of the
//! demand size when demand occurs.

use serde::{Deserialize, Serialize};

use super::{ForecastError, ProbaModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwofoldConfig {
    /// Number of occurrence lags used as features.
    pub lags: usize,
    /// Smoothing constant for nonzero sizes.
    pub size_alpha: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for TwofoldConfig {
    fn default() -> Self {
        Self {
            lags: 4,
            size_alpha: 0.1,
            learning_rate: 0.5,
            iterations: 500,
            l2: 1e-3,
        }
    }
}

/// Feature names for the occurrence model, in column order.
pub fn occurrence_feature_names(lags: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=lags).map(|k| format!("occurrence_lag_{k}")).collect();
    names.push("period_index".into());
    names.push("rolling_nonzero_rate".into());
    names
}

/// Features for predicting occurrence at period `t` from the periods before
/// it. Requires `t >= lags`.
pub fn occurrence_features(
    quantities: &[f64],
    t: usize,
    lags: usize,
    horizon_scale: f64,
) -> Vec<f64> {
    let mut row: Vec<f64> = (1..=lags)
        .map(|k| if quantities[t - k] > 0.0 { 1.0 } else { 0.0 })
        .collect();
    row.push(t as f64 / horizon_scale.max(1.0));
    let nonzero = quantities[..t].iter().filter(|&&q| q > 0.0).count();
    row.push(nonzero as f64 / t.max(1) as f64);
    row
}

/// Logistic regression over occurrence features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub lags: usize,
    /// Divides the period index so the calendar feature stays near `[0, 1]`.
    pub horizon_scale: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl OccurrenceModel {
    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(
            self.bias
                + self
                    .weights
                    .iter()
                    .zip(row)
                    .map(|(w, x)| w * x)
                    .sum::<f64>(),
        )
    }

    /// Full-batch gradient descent on log-loss.
    pub fn fit(
        rows: &[Vec<f64>],
        targets: &[bool],
        config: &TwofoldConfig,
        horizon_scale: f64,
    ) -> Self {
        let dim = rows.first().map_or(config.lags + 2, Vec::len);
        let mut model = Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            lags: config.lags,
            horizon_scale,
        };
        let n = rows.len().max(1) as f64;
        for _ in 0..config.iterations {
            let mut gw = vec![0.0; dim];
            let mut gb = 0.0;
            for (row, &y) in rows.iter().zip(targets) {
                let err = model.probability(row) - if y { 1.0 } else { 0.0 };
                gw.iter_mut().zip(row).for_each(|(g, x)| *g += err * x / n);
                gb += err / n;
            }
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= config.learning_rate * (g + config.l2 * *w);
            }
            model.bias -= config.learning_rate * gb;
        }
        model
    }

    pub fn features_for_next(&self, quantities: &[f64]) -> Vec<f64> {
        occurrence_features(quantities, quantities.len(), self.lags, self.horizon_scale)
    }
}

impl ProbaModel for OccurrenceModel {
    fn n_classes(&self) -> usize {
        2
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        if x.len() != self.weights.len() {
            return Err(ForecastError::Dimension {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        let p = self.probability(x);
        Ok(vec![1.0 - p, p])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwofoldForecast {
    pub occurrence_probability: f64,
    /// Expected size given that demand occurs.
    pub expected_size: f64,
    pub point: f64,
}

impl TwofoldForecast {
    pub fn new(occurrence_probability: f64, expected_size: f64) -> Self {
        Self {
            occurrence_probability,
            expected_size,
            point: occurrence_probability * expected_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwofoldModel {
    pub occurrence: OccurrenceModel,
    pub size_level: f64,
    /// Training rows of the occurrence model, kept as explanation background.
    pub background: Vec<Vec<f64>>,
}

impl TwofoldModel {
    /// Fits on the whole history. Needs more than `lags` periods and at least
    /// one nonzero demand.
    pub fn fit(quantities: &[f64], config: &TwofoldConfig) -> Result<Self, ForecastError> {
        if quantities.len() <= config.lags {
            return Err(ForecastError::InsufficientHistory {
                needed: config.lags + 1,
                got: quantities.len(),
            });
        }
        if let Some(q) = quantities.iter().find(|q| !q.is_finite() || **q < 0.0) {
            return Err(ForecastError::InvalidInput(format!(
                "negative or non-finite quantity {q}"
            )));
        }
        let mut sizes = quantities.iter().copied().filter(|&q| q > 0.0);
        let first = sizes.next().ok_or(ForecastError::NoDemand)?;
        let size_level = sizes.fold(first, |s, q| s + config.size_alpha * (q - s));

        let scale = quantities.len() as f64;
        let rows: Vec<Vec<f64>> = (config.lags..quantities.len())
            .map(|t| occurrence_features(quantities, t, config.lags, scale))
            .collect();
        let targets: Vec<bool> = (config.lags..quantities.len())
            .map(|t| quantities[t] > 0.0)
            .collect();
        let occurrence = OccurrenceModel::fit(&rows, &targets, config, scale);
        Ok(Self {
            occurrence,
            size_level,
            background: rows,
        })
    }

    /// Forecast for the period right after `history`.
    pub fn forecast_next(&self, history: &[f64]) -> Result<TwofoldForecast, ForecastError> {
        if history.len() < self.occurrence.lags {
            return Err(ForecastError::InsufficientHistory {
                needed: self.occurrence.lags,
                got: history.len(),
            });
        }
        let p = self
            .occurrence
            .probability(&self.occurrence.features_for_next(history));
        Ok(TwofoldForecast::new(p, self.size_level))
    }
}

/// Fits on `quantities` and forecasts the next period.
pub fn forecast_twofold(
    quantities: &[f64],
    config: &TwofoldConfig,
) -> Result<TwofoldForecast, ForecastError> {
    TwofoldModel::fit(quantities, config)?.forecast_next(quantities)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_demand_predicts_occurrence() {
        let q = vec![3.0; 30];
        let f = forecast_twofold(&q, &TwofoldConfig::default()).unwrap();
        assert!(f.occurrence_probability >= 0.9);
        assert!((f.expected_size - 3.0).abs() < 1e-12);
        assert!((f.point - f.occurrence_probability * 3.0).abs() < 1e-12);
    }

    #[test]
    fn alternating_pattern_is_lag_one_separable() {
        let q: Vec<f64> = (0..60)
            .map(|t| if t % 2 == 0 { 0.0 } else { 6.0 })
            .collect();
        let cfg = TwofoldConfig::default();
        let model = TwofoldModel::fit(&q[..40], &cfg).unwrap();
        for t in 40..60 {
            let f = model.forecast_next(&q[..t]).unwrap();
            assert_eq!(f.occurrence_probability >= 0.5, q[t] > 0.0, "period {t}");
        }
    }

    #[test]
    fn zero_probability_gives_zero_point() {
        assert_eq!(TwofoldForecast::new(0.0, 12.0).point, 0.0);
    }

    #[test]
    fn short_history_errors() {
        let cfg = TwofoldConfig::default();
        assert!(matches!(
            forecast_twofold(&[1.0, 0.0, 1.0], &cfg),
            Err(ForecastError::InsufficientHistory { .. })
        ));
        assert!(matches!(
            forecast_twofold(&[0.0; 10], &cfg),
            Err(ForecastError::NoDemand)
        ));
    }

    #[test]
    fn feature_names_match_columns() {
        let q = [1.0, 0.0, 2.0, 0.0, 0.0, 3.0];
        let row = occurrence_features(&q, 5, 4, 6.0);
        assert_eq!(row.len(), occurrence_feature_names(4).len());
        assert_eq!(&row[..4], &[0.0, 0.0, 1.0, 0.0]);
        assert!((row[5] - 2.0 / 5.0).abs() < 1e-12);
    }
}
