//! Synthetic data and what-if scenarios: logo renders with print defects,
//! interpolation oversampling, stream balancing, demand scenarios and IMU
//! sequences. Nothing here ever produces a sample with real provenance.

pub mod balancer;
pub mod image;
pub mod imu;
pub mod intermittent;
pub mod logo;
pub mod oversample;
pub mod scenario;

use thiserror::Error;

use crate::forecasting::ForecastError;

pub use balancer::{BalanceOutcome, BalancerConfig, ProductionStats, StreamBalancer, StreamItem};
pub use image::{image_feature_names, image_features, read_pgm, write_pgm, IMAGE_FEATURE_DIM};
pub use imu::{generate_imu_sequence, imu_sample, Activity};
pub use intermittent::{generate_demand, DemandProfile};
pub use logo::{generate_logo_sample, render_logo, Defect, LogoSceneParams};
pub use oversample::{augmented, interpolate, oversample_minority, SyntheticPoint};
pub use scenario::{
    apply_adjustments, simulate_scenario, Adjustment, AdjustmentKind, ScenarioOutcome, ScenarioSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cannot interpolate: class {class} has {count} sample(s)")]
    CannotInterpolate { class: usize, count: usize },
    #[error("adjustment {from}..={to} outside series span {first}..={last}")]
    OutOfSpan {
        from: i64,
        to: i64,
        first: i64,
        last: i64,
    },
    #[error("adjusted quantity {value} at period {period} is negative")]
    NegativeQuantity { period: i64, value: f64 },
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}
