//! Worker activity recognition from IMU windows and the safe-zone rule that
//! turns predicted movement into robot speed commands.

pub mod features;
pub mod safe_zone;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::forecasting::{train_batch, BatchConfig, ClassifierModel, ForecastError};
use crate::simulation::{generate_imu_sequence, Activity};
use crate::types::{ImuWindow, LabeledSet, Prediction, IMU_CHANNELS, IMU_RATE_HZ};

pub use features::{
    featurize, imu_feature_names, window_starts, zero_crossing_rate, IMU_FEATURE_DIM, MIN_WINDOW,
};
pub use safe_zone::{
    path_corridor_distance, safe_zone_command, Command, Point, SafeZoneState, DEFAULT_BUFFER_M,
};

/// Classification window: two seconds.
pub const WINDOW_SAMPLES: usize = 2 * IMU_RATE_HZ;
/// Hop between windows: 50% overlap.
pub const HOP_SAMPLES: usize = WINDOW_SAMPLES / 2;
/// Prediction horizon in seconds.
pub const DEFAULT_HORIZON_S: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntentionError {
    #[error("window has {got} samples, need at least {needed}")]
    ShortWindow { needed: usize, got: usize },
    #[error("speed table has no entry for {0:?}")]
    MissingSpeed(String),
    #[error("degenerate corridor: {0}")]
    DegenerateCorridor(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("frame line {line}: {message}")]
    Frame { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ForecastError),
}

/// Expected walking speed and heading persistence per activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedEntry {
    /// Meters per second.
    pub speed: f64,
    /// Fraction of the horizon the current heading is kept, in `[0, 1]`.
    #[serde(default = "one")]
    pub persistence: f64,
}

fn one() -> f64 {
    1.0
}

pub type SpeedTable = BTreeMap<String, SpeedEntry>;

pub fn default_speed_table() -> SpeedTable {
    [
        ("idle", 0.0),
        ("walk", 1.2),
        ("assemble", 0.0),
        ("carry", 0.9),
    ]
    .into_iter()
    .map(|(a, speed)| {
        (
            a.to_string(),
            SpeedEntry {
                speed,
                persistence: 1.0,
            },
        )
    })
    .collect()
}

/// Probability-weighted expected speed times the horizon, along the unit
/// vector of `heading`. A zero heading gives zero displacement.
pub fn predict_displacement(
    prediction: &Prediction,
    table: &SpeedTable,
    heading: Point,
    horizon_s: f64,
) -> Result<Point, IntentionError> {
    if !(horizon_s >= 0.0 && horizon_s.is_finite()) {
        return Err(IntentionError::InvalidInput(format!(
            "horizon {horizon_s} s"
        )));
    }
    let mut speed = 0.0;
    for (class, p) in prediction.classes.iter().zip(&prediction.scores) {
        let entry = table
            .get(class)
            .ok_or_else(|| IntentionError::MissingSpeed(class.clone()))?;
        speed += p * entry.speed * entry.persistence;
    }
    let norm = (heading.0 * heading.0 + heading.1 * heading.1).sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Ok((0.0, 0.0));
    }
    let dist = speed * horizon_s;
    Ok((dist * heading.0 / norm, dist * heading.1 / norm))
}

/// Activity classifier over featurized two-second windows, backed by the
/// batch network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityClassifier {
    pub model: ClassifierModel,
}

impl ActivityClassifier {
    pub fn train(corpus: &LabeledSet, config: &BatchConfig) -> Result<Self, IntentionError> {
        Ok(Self {
            model: train_batch(corpus, config)?,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.model.classes
    }

    pub fn classify(
        &self,
        sample_id: &str,
        window: &ImuWindow,
    ) -> Result<Prediction, IntentionError> {
        Ok(self.model.predict(sample_id, &featurize(window)?)?)
    }

    /// One prediction per two-second window with 50% overlap.
    pub fn classify_sequence(
        &self,
        sequence: &ImuWindow,
    ) -> Result<Vec<Prediction>, IntentionError> {
        window_starts(sequence.len(), WINDOW_SAMPLES, HOP_SAMPLES)
            .into_iter()
            .map(|s| self.classify(&format!("w{s}"), &sequence.slice(s, WINDOW_SAMPLES)))
            .collect()
    }
}

/// Featurized windows cut from `per_class` synthetic sequences of each
/// activity, `seconds` long each, with the given seed offset.
pub fn imu_corpus(per_class: usize, seconds: f64, seed: u64) -> Result<LabeledSet, IntentionError> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (k, activity) in Activity::ALL.into_iter().enumerate() {
        for i in 0..per_class {
            let s = seed
                .wrapping_mul(1_000_003)
                .wrapping_add((k * 10_000 + i) as u64);
            let seq = generate_imu_sequence(activity, seconds, s)
                .map_err(|e| IntentionError::InvalidInput(e.to_string()))?;
            for start in window_starts(seq.len(), WINDOW_SAMPLES, HOP_SAMPLES) {
                features.push(featurize(&seq.slice(start, WINDOW_SAMPLES))?);
                labels.push(activity.index());
            }
        }
    }
    let classes = Activity::ALL
        .iter()
        .map(|a| a.as_str().to_string())
        .collect();
    LabeledSet::new(features, labels, classes)
        .map_err(|e| IntentionError::InvalidInput(e.to_string()))
}

/// One IMU frame as it arrives on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImuFrame {
    pub ts: i64,
    pub values: [f64; IMU_CHANNELS],
}

/// Parses line-delimited JSON frames into a window.
pub fn parse_frames(text: &str) -> Result<ImuWindow, IntentionError> {
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); IMU_CHANNELS];
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let frame: ImuFrame = serde_json::from_str(line).map_err(|e| IntentionError::Frame {
            line: i + 1,
            message: e.to_string(),
        })?;
        for (c, v) in frame.values.iter().enumerate() {
            channels[c].push(*v);
        }
    }
    ImuWindow::new(channels).map_err(|e| IntentionError::InvalidInput(e.to_string()))
}

/// The per-window outcome of the real-time path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentDecision {
    pub activity: String,
    pub prediction: Prediction,
    pub displacement: Point,
    pub distance_m: f64,
    pub command: Command,
}

/// Featurize, classify, predict displacement and command for one window.
#[allow(clippy::too_many_arguments)]
pub fn decide(
    classifier: &ActivityClassifier,
    window: &ImuWindow,
    window_id: &str,
    table: &SpeedTable,
    position: Point,
    heading: Point,
    corridor: &[Point],
    buffer: f64,
) -> Result<IntentDecision, IntentionError> {
    let prediction = classifier.classify(window_id, window)?;
    let displacement = predict_displacement(&prediction, table, heading, DEFAULT_HORIZON_S)?;
    let state = SafeZoneState {
        position,
        displacement,
        corridor: corridor.to_vec(),
        buffer,
    };
    let distance_m = path_corridor_distance(&state)?;
    let command = safe_zone_command(&state)?;
    Ok(IntentDecision {
        activity: prediction.predicted_class().to_string(),
        prediction,
        displacement,
        distance_m,
        command,
    })
}
