//! Domain types shared by every module: samples, images, predictions and
//! labeled sets.

use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

/// Milliseconds since the Unix epoch.
pub type Timestamp = i64;

pub fn now_ms() -> Timestamp {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as i64)
        .unwrap_or(0)
}

/// Tolerance for probability vectors summing to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("image has {got} pixels, expected {expected}")]
    PixelCount { expected: usize, got: usize },
    #[error("pixel {index} = {value} outside [0,1]")]
    PixelRange { index: usize, value: f64 },
    #[error("scores are not a probability simplex: {0}")]
    NotSimplex(String),
    #[error("label already set for sample {0}")]
    LabelAlreadySet(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("label index {label} out of range for {classes} classes")]
    LabelRange { label: usize, classes: usize },
    #[error("empty dataset")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleKind {
    Image,
    DemandWindow,
    ImuWindow,
    Tabular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Synthetic,
    InjectedKnownDefect,
}

impl Provenance {
    pub fn is_real(self) -> bool {
        self == Provenance::Real
    }
}

/// A unit of observable data. Features are always finite and the provenance
/// cannot change after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SampleDoc")]
pub struct Sample {
    pub id: String,
    pub kind: SampleKind,
    pub payload_ref: Option<String>,
    features: Vec<f64>,
    label: Option<String>,
    provenance: Provenance,
    pub created_at: Timestamp,
}

#[derive(Deserialize)]
struct SampleDoc {
    id: String,
    kind: SampleKind,
    #[serde(default)]
    payload_ref: Option<String>,
    features: Vec<f64>,
    #[serde(default)]
    label: Option<String>,
    provenance: Provenance,
    created_at: Timestamp,
}

impl TryFrom<SampleDoc> for Sample {
    type Error = DataError;

    fn try_from(doc: SampleDoc) -> Result<Self, Self::Error> {
        let mut s = Sample::new(doc.id, doc.kind, doc.features, doc.provenance)?;
        s.payload_ref = doc.payload_ref;
        s.label = doc.label;
        s.created_at = doc.created_at;
        Ok(s)
    }
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        kind: SampleKind,
        features: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        check_finite(&features)?;
        Ok(Self {
            id: id.into(),
            kind,
            payload_ref: None,
            features,
            label: None,
            provenance,
            created_at: now_ms(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self, DataError> {
        self.set_label(label)?;
        Ok(self)
    }

    pub fn with_payload_ref(mut self, key: impl Into<String>) -> Self {
        self.payload_ref = Some(key.into());
        self
    }

    /// Sets the ground-truth label. Re-labeling goes through a new
    /// `LabelRecord`, never through mutation.
    pub fn set_label(&mut self, label: impl Into<String>) -> Result<(), DataError> {
        if self.label.is_some() {
            return Err(DataError::LabelAlreadySet(self.id.clone()));
        }
        self.label = Some(label.into());
        Ok(())
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

pub fn check_finite(values: &[f64]) -> Result<(), DataError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(DataError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrayImageDoc")]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

#[derive(Deserialize)]
struct GrayImageDoc {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl TryFrom<GrayImageDoc> for GrayImage {
    type Error = DataError;
    fn try_from(d: GrayImageDoc) -> Result<Self, DataError> {
        GrayImage::from_pixels(d.width, d.height, d.pixels)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![value.clamp(0.0, 1.0); width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, DataError> {
        if pixels.len() != width * height {
            return Err(DataError::PixelCount {
                expected: width * height,
                got: pixels.len(),
            });
        }
        for (index, &value) in pixels.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(DataError::PixelRange { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from arbitrary reals, clamping into `[0, 1]`.
    /// NaN maps to 0.
    pub fn from_clamped(width: usize, height: usize, values: Vec<f64>) -> Result<Self, DataError> {
        let pixels = values
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.width + x] = value.clamp(0.0, 1.0);
    }

    pub fn same_dims(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn sum(&self) -> f64 {
        self.pixels.iter().sum()
    }
}

/// Model output: a probability simplex over the model's classes, plus an
/// optional scalar for forecast outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub sample_id: String,
    pub model_id: String,
    pub classes: Vec<String>,
    pub scores: Vec<f64>,
    pub calibrated: bool,
    #[serde(default)]
    pub scalar: Option<f64>,
}

impl Prediction {
    pub fn new(
        sample_id: impl Into<String>,
        model_id: impl Into<String>,
        classes: Vec<String>,
        scores: Vec<f64>,
        calibrated: bool,
    ) -> Result<Self, DataError> {
        if classes.len() != scores.len() {
            return Err(DataError::Dimension {
                expected: classes.len(),
                got: scores.len(),
            });
        }
        check_simplex(&scores)?;
        Ok(Self {
            sample_id: sample_id.into(),
            model_id: model_id.into(),
            classes,
            scores,
            calibrated,
            scalar: None,
        })
    }

    pub fn argmax(&self) -> usize {
        argmax(&self.scores)
    }

    pub fn predicted_class(&self) -> &str {
        &self.classes[self.argmax()]
    }
}

/// Index of the largest value; the first one wins on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn check_simplex(scores: &[f64]) -> Result<(), DataError> {
    if scores.is_empty() {
        return Err(DataError::NotSimplex("empty".into()));
    }
    if let Some(v) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(DataError::NotSimplex(format!("entry {v}")));
    }
    let total: f64 = scores.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(DataError::NotSimplex(format!("sum {total}")));
    }
    Ok(())
}

/// Rescales nonnegative weights onto the simplex. All-zero input maps to the
/// uniform distribution.
pub fn normalize_simplex(weights: &mut [f64]) {
    for w in weights.iter_mut() {
        if !w.is_finite() || *w < 0.0 {
            *w = 0.0;
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else if !weights.is_empty() {
        let u = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = u);
    }
}

/// Dense labeled data: one feature row per sample and a class index per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabeledSet {
    pub fn new(
        features: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self, DataError> {
        if features.len() != labels.len() {
            return Err(DataError::Dimension {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            for row in &features {
                if row.len() != dim {
                    return Err(DataError::Dimension {
                        expected: dim,
                        got: row.len(),
                    });
                }
                check_finite(row)?;
            }
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(DataError::LabelRange {
                label,
                classes: classes.len(),
            });
        }
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Appends the rows of `other`, which must share the class list.
    pub fn extend(&mut self, other: &LabeledSet) {
        debug_assert_eq!(self.classes, other.classes);
        self.features.extend(other.features.iter().cloned());
        self.labels.extend_from_slice(&other.labels);
    }
}

/// IMU sample rate in Hz.
pub const IMU_RATE_HZ: usize = 20;
/// Number of IMU channels: accel xyz, gyro xyz, magnet xyz, capacitance.
pub const IMU_CHANNELS: usize = 10;
pub const IMU_CHANNEL_NAMES: [&str; IMU_CHANNELS] = [
    "accel_x",
    "accel_y",
    "accel_z",
    "gyro_x",
    "gyro_y",
    "gyro_z",
    "mag_x",
    "mag_y",
    "mag_z",
    "capacitance",
];

/// Ten equally long channels sampled at 20 Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ImuWindowDoc")]
pub struct ImuWindow {
    channels: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ImuWindowDoc {
    channels: Vec<Vec<f64>>,
}

impl TryFrom<ImuWindowDoc> for ImuWindow {
    type Error = DataError;

    fn try_from(doc: ImuWindowDoc) -> Result<Self, Self::Error> {
        ImuWindow::new(doc.channels)
    }
}

impl ImuWindow {
    pub fn new(channels: Vec<Vec<f64>>) -> Result<Self, DataError> {
        if channels.len() != IMU_CHANNELS {
            return Err(DataError::Dimension {
                expected: IMU_CHANNELS,
                got: channels.len(),
            });
        }
        let len = channels[0].len();
        for c in &channels {
            if c.len() != len {
                return Err(DataError::Dimension {
                    expected: len,
                    got: c.len(),
                });
            }
            check_finite(c)?;
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / IMU_RATE_HZ as f64
    }

    /// Samples `start..start + len` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> ImuWindow {
        ImuWindow {
            channels: self
                .channels
                .iter()
                .map(|c| c[start..start + len].to_vec())
                .collect(),
        }
    }

    /// Frame-major flattening: all channels at t=0, then t=1, ...
    pub fn frames(&self) -> Vec<[f64; IMU_CHANNELS]> {
        (0..self.len())
            .map(|t| std::array::from_fn(|c| self.channels[c][t]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_rejects_non_finite_features() {
        let err = Sample::new(
            "s",
            SampleKind::Tabular,
            vec![1.0, f64::NAN],
            Provenance::Real,
        );
        assert_eq!(err.unwrap_err(), DataError::NonFinite(1));
    }

    #[test]
    fn label_is_set_once() {
        let mut s = Sample::new("s", SampleKind::Tabular, vec![0.0], Provenance::Real).unwrap();
        s.set_label("good").unwrap();
        assert!(matches!(
            s.set_label("bad"),
            Err(DataError::LabelAlreadySet(_))
        ));
        assert_eq!(s.label(), Some("good"));
    }

    #[test]
    fn sample_deserialization_validates() {
        let doc = r#"{"id":"a","kind":"tabular","features":[1.0],"provenance":"synthetic","created_at":5}"#;
        let s: Sample = serde_json::from_str(doc).unwrap();
        assert_eq!(s.provenance(), Provenance::Synthetic);
        let bad = r#"{"id":"a","kind":"image","features":[],"provenance":"bogus","created_at":5}"#;
        assert!(serde_json::from_str::<Sample>(bad).is_err());
    }

    #[test]
    fn image_invariants() {
        assert!(GrayImage::from_pixels(2, 2, vec![0.0; 3]).is_err());
        assert!(GrayImage::from_pixels(1, 1, vec![1.5]).is_err());
        let img = GrayImage::from_clamped(2, 1, vec![-1.0, 2.0]).unwrap();
        assert_eq!(img.pixels(), &[0.0, 1.0]);
    }

    #[test]
    fn prediction_requires_simplex() {
        let classes = vec!["a".to_string(), "b".to_string()];
        assert!(Prediction::new("s", "m", classes.clone(), vec![0.5, 0.4], false).is_err());
        let p = Prediction::new("s", "m", classes, vec![0.3, 0.7], false).unwrap();
        assert_eq!(p.predicted_class(), "b");
    }
}
