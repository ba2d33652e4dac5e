//! Seeded intermittent demand series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::forecasting::DemandSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandProfile {
    pub periods: usize,
    /// Probability that a period has nonzero demand.
    pub occurrence: f64,
    /// Mean size of a nonzero demand; sizes are `1 + Poisson(mean - 1)`.
    pub mean_size: f64,
}

impl Default for DemandProfile {
    fn default() -> Self {
        Self {
            periods: 52,
            occurrence: 0.3,
            mean_size: 6.0,
        }
    }
}

/// Bernoulli occurrences with Poisson-distributed sizes. The first period
/// with demand is never later than the middle of the series.
pub fn generate_demand(
    product_id: &str,
    profile: &DemandProfile,
    seed: u64,
) -> Result<DemandSeries, SimulationError> {
    if profile.periods < 2 {
        return Err(SimulationError::InvalidParams(
            "need at least 2 periods".into(),
        ));
    }
    if !(profile.occurrence > 0.0 && profile.occurrence <= 1.0) {
        return Err(SimulationError::InvalidParams(format!(
            "occurrence {} outside (0,1]",
            profile.occurrence
        )));
    }
    if !(profile.mean_size >= 1.0 && profile.mean_size.is_finite()) {
        return Err(SimulationError::InvalidParams(format!(
            "mean size {} below 1",
            profile.mean_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = (profile.mean_size > 1.0)
        .then(|| Poisson::new(profile.mean_size - 1.0))
        .transpose()
        .map_err(|e| SimulationError::InvalidParams(e.to_string()))?;
    let size = |rng: &mut ChaCha8Rng| 1.0 + extra.as_ref().map_or(0.0, |p| p.sample(rng));
    let mut quantities: Vec<f64> = (0..profile.periods)
        .map(|_| {
            if rng.random::<f64>() < profile.occurrence {
                size(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    if !quantities[..profile.periods / 2].iter().any(|&q| q > 0.0) {
        let at = rng.random_range(0..profile.periods / 2);
        quantities[at] = size(&mut rng);
    }
    Ok(DemandSeries::from_quantities(product_id, quantities)?)
}
