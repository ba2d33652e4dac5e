//! Classifiers for quality inspection, demand forecasters for intermittent
//! series, and the metrics used to evaluate both.

pub mod backtest;
pub mod calibration;
pub mod croston;
pub mod demand;
pub mod evaluation;
pub mod knn;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod mutual_info;
pub mod spec_metric;
pub mod twofold;

use thiserror::Error;

pub use backtest::{backtest, BacktestReport, DemandMethod};
pub use calibration::{Calibrator, PlattScaler};
pub use croston::{forecast_croston, CrostonFit, CrostonVariant};
pub use demand::{
    classify_demand, pool_by_magnitude, read_demand_jsonl, write_demand_jsonl, DemandCategory,
    DemandClass, DemandRecord, DemandSeries,
};
pub use evaluation::{evaluate, evaluate_with, stratified_folds};
pub use knn::StreamingKnn;
pub use metrics::{auc_pair_count, auc_trapezoid, brier_score, score_predictions, Metrics};
pub use mlp::{Mlp, MlpConfig};
pub use model::{
    calibrate, train_batch, train_streaming, BatchConfig, ClassifierModel, ModelMode, ModelParams,
    StreamingConfig, MODEL_FORMAT,
};
pub use mutual_info::{rank_features_mi, rank_features_mi_with, FeatureScore};
pub use spec_metric::{spec_metric, SpecParams};
pub use twofold::{forecast_twofold, TwofoldConfig, TwofoldForecast, TwofoldModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("cold model: no labeled sample seen yet")]
    ColdModel,
    #[error("{0}")]
    DegenerateLabels(String),
    #[error("cannot stratify: a class has fewer samples than {folds} folds")]
    CannotStratify { folds: usize },
    #[error("model format mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: String, found: String },
    #[error("training diverged to non-finite weights")]
    Diverged,
    #[error("no demand observed")]
    NoDemand,
    #[error("insufficient history: need {needed} periods, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
}

/// Anything that maps a feature vector to class probabilities.
pub trait ProbaModel: Sync {
    fn n_classes(&self) -> usize;
    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError>;
}

impl ProbaModel for ClassifierModel {
    fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        self.scores(x)
    }
}

impl<F> ProbaModel for (usize, F)
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn n_classes(&self) -> usize {
        self.0
    }

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        Ok((self.1)(x))
    }
}
