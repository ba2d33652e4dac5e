//! What-if demand scenarios.

use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::forecasting::{DemandMethod, DemandSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AdjustmentKind {
    Multiply(f64),
    Add(f64),
}

/// Adjustment applied to every period in `from..=to` (period values, not
/// positions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub from: i64,
    pub to: i64,
    #[serde(flatten)]
    pub kind: AdjustmentKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub product_id: String,
    #[serde(default)]
    pub adjustments: Vec<Adjustment>,
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub label: String,
    pub method: String,
    pub projected: DemandSeries,
    pub base_forecast: f64,
    pub scenario_forecast: f64,
    pub delta: f64,
}

/// Applies the adjustments in order. Every range must lie inside the
/// series span and every resulting quantity must stay nonnegative.
pub fn apply_adjustments(
    base: &DemandSeries,
    adjustments: &[Adjustment],
) -> Result<DemandSeries, SimulationError> {
    let periods = base.periods();
    let (Some(&first), Some(&last)) = (periods.first(), periods.last()) else {
        return Err(SimulationError::InvalidParams("empty base series".into()));
    };
    let mut q = base.quantities().to_vec();
    for adj in adjustments {
        if adj.from > adj.to || adj.from < first || adj.to > last {
            return Err(SimulationError::OutOfSpan {
                from: adj.from,
                to: adj.to,
                first,
                last,
            });
        }
        if let AdjustmentKind::Multiply(m) = adj.kind {
            if !(m > 0.0) || !m.is_finite() {
                return Err(SimulationError::InvalidParams(format!(
                    "multiplier {m} must be positive"
                )));
            }
        }
        for (i, &p) in periods.iter().enumerate() {
            if p >= adj.from && p <= adj.to {
                q[i] = match adj.kind {
                    AdjustmentKind::Multiply(m) => q[i] * m,
                    AdjustmentKind::Add(d) => q[i] + d,
                };
                if !(q[i] >= 0.0) {
                    return Err(SimulationError::NegativeQuantity {
                        period: p,
                        value: q[i],
                    });
                }
            }
        }
    }
    let mut out = DemandSeries::new(base.product_id.clone(), periods.to_vec(), q)
        .map_err(|e| SimulationError::InvalidParams(e.to_string()))?;
    out.pool_id = base.pool_id;
    Ok(out)
}

/// Forecasts the base and the adjusted series with the same method.
pub fn simulate_scenario(
    base: &DemandSeries,
    spec: &ScenarioSpec,
    method: &DemandMethod,
) -> Result<ScenarioOutcome, SimulationError> {
    let projected = apply_adjustments(base, &spec.adjustments)?;
    let base_forecast = method.forecast_next(base.quantities())?.0;
    let scenario_forecast = method.forecast_next(projected.quantities())?.0;
    Ok(ScenarioOutcome {
        label: spec.label.clone(),
        method: method.name().to_string(),
        projected,
        base_forecast,
        scenario_forecast,
        delta: scenario_forecast - base_forecast,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DemandSeries {
        DemandSeries::from_quantities("p", vec![0.0, 4.0, 0.0, 0.0, 7.0, 0.0, 3.0, 5.0]).unwrap()
    }

    fn spec(adjustments: Vec<Adjustment>) -> ScenarioSpec {
        ScenarioSpec {
            product_id: "p".into(),
            adjustments,
            label: "t".into(),
        }
    }

    #[test]
    fn identity_scenario() {
        let out = simulate_scenario(
            &base(),
            &spec(vec![]),
            &DemandMethod::Croston { alpha: 0.1 },
        )
        .unwrap();
        assert_eq!(out.projected, base());
        assert_eq!(out.delta, 0.0);
    }

    #[test]
    fn doubling_doubles_croston() {
        let adj = Adjustment {
            from: 0,
            to: 7,
            kind: AdjustmentKind::Multiply(2.0),
        };
        let out = simulate_scenario(
            &base(),
            &spec(vec![adj]),
            &DemandMethod::Croston { alpha: 0.1 },
        )
        .unwrap();
        assert!((out.scenario_forecast - 2.0 * out.base_forecast).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_and_out_of_span() {
        let neg = Adjustment {
            from: 1,
            to: 1,
            kind: AdjustmentKind::Add(-5.0),
        };
        assert!(matches!(
            apply_adjustments(&base(), &[neg]),
            Err(SimulationError::NegativeQuantity { period: 1, .. })
        ));
        let outside = Adjustment {
            from: 5,
            to: 9,
            kind: AdjustmentKind::Add(1.0),
        };
        assert!(matches!(
            apply_adjustments(&base(), &[outside]),
            Err(SimulationError::OutOfSpan { .. })
        ));
        let zero_mult = Adjustment {
            from: 0,
            to: 1,
            kind: AdjustmentKind::Multiply(0.0),
        };
        assert!(apply_adjustments(&base(), &[zero_mult]).is_err());
    }
}
