use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::calibration::Calibrator;
use super::knn::StreamingKnn;
use super::metrics::brier_score;
use super::mlp::{Mlp, MlpConfig};
use super::mutual_info::rank_features_mi;
use super::ForecastError;
use crate::types::{check_finite, LabeledSet, Prediction};

/// Version tag written into serialized model documents.
pub const MODEL_FORMAT: &str = "workbench-model/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Batch,
    Streaming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModelParams {
    Batch(Mlp),
    Streaming(StreamingKnn),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub mlp: MlpConfig,
    /// Keep only the top-n features by mutual information.
    pub mi_top: Option<usize>,
    pub mi_bins: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            mlp: MlpConfig::default(),
            mi_top: None,
            mi_bins: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamingConfig {
    pub k: usize,
    pub window: usize,
    pub feature_subset: Option<Vec<usize>>,
}

impl Default for StreamingConfig {
    fn default() -> Self {
        Self {
            k: 5,
            window: 500,
            feature_subset: None,
        }
    }
}

/// A trained classifier with its class set, optional feature projection and
/// optional calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub model_id: String,
    pub classes: Vec<String>,
    /// Dimension of the raw feature vectors the model accepts.
    pub input_dim: usize,
    pub feature_subset: Option<Vec<usize>>,
    pub params: ModelParams,
    pub calibrator: Option<Calibrator>,
}

impl ClassifierModel {
    pub fn mode(&self) -> ModelMode {
        match self.params {
            ModelParams::Batch(_) => ModelMode::Batch,
            ModelParams::Streaming(_) => ModelMode::Streaming,
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    fn project(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        if x.len() != self.input_dim {
            return Err(ForecastError::Dimension {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        check_finite(x).map_err(|e| ForecastError::InvalidInput(e.to_string()))?;
        Ok(match &self.feature_subset {
            Some(idx) => idx.iter().map(|&i| x[i]).collect(),
            None => x.to_vec(),
        })
    }

    /// Uncalibrated class probabilities.
    pub fn raw_scores(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        let z = self.project(x)?;
        match &self.params {
            ModelParams::Batch(net) => Ok(net.predict_proba(&z)),
            ModelParams::Streaming(knn) => knn.predict_proba(&z),
        }
    }

    /// Class probabilities after calibration, if any.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, ForecastError> {
        let raw = self.raw_scores(x)?;
        Ok(match &self.calibrator {
            Some(c) => c.apply(&raw),
            None => raw,
        })
    }

    pub fn predict(&self, sample_id: &str, x: &[f64]) -> Result<Prediction, ForecastError> {
        let scores = self.scores(x)?;
        Prediction::new(
            sample_id,
            self.model_id.clone(),
            self.classes.clone(),
            scores,
            self.calibrator.is_some(),
        )
        .map_err(|e| ForecastError::InvalidInput(e.to_string()))
    }

    /// Incremental update; only streaming models learn online.
    pub fn update(&mut self, x: &[f64], label: usize) -> Result<(), ForecastError> {
        let z = self.project(x)?;
        match &mut self.params {
            ModelParams::Streaming(knn) => knn.update(z, label),
            ModelParams::Batch(_) => Err(ForecastError::InvalidConfig(
                "batch models are retrained, not updated".into(),
            )),
        }
    }

    pub fn to_document(&self) -> Value {
        serde_json::json!({ "format": MODEL_FORMAT, "model": self })
    }

    pub fn from_document(doc: &Value) -> Result<Self, ForecastError> {
        match doc.get("format").and_then(Value::as_str) {
            Some(MODEL_FORMAT) => {}
            other => {
                return Err(ForecastError::VersionMismatch {
                    expected: MODEL_FORMAT.to_string(),
                    found: other.unwrap_or("<missing>").to_string(),
                })
            }
        }
        serde_json::from_value(doc["model"].clone())
            .map_err(|e| ForecastError::InvalidInput(e.to_string()))
    }
}

fn check_training_set(data: &LabeledSet) -> Result<(), ForecastError> {
    if data.is_empty() {
        return Err(ForecastError::DegenerateLabels("empty training set".into()));
    }
    let dim = data.dim();
    for row in &data.features {
        if row.len() != dim {
            return Err(ForecastError::Dimension {
                expected: dim,
                got: row.len(),
            });
        }
        check_finite(row).map_err(|e| ForecastError::InvalidInput(e.to_string()))?;
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ForecastError::DegenerateLabels(
            "degenerate label set".into(),
        ));
    }
    Ok(())
}

/// Trains the batch network. Identical data and seed give identical weights.
pub fn train_batch(
    data: &LabeledSet,
    config: &BatchConfig,
) -> Result<ClassifierModel, ForecastError> {
    check_training_set(data)?;
    let feature_subset = match config.mi_top {
        Some(top) if top < data.dim() => {
            let mut idx: Vec<usize> = rank_features_mi(data, config.mi_bins)?
                .into_iter()
                .take(top.max(1))
                .map(|s| s.index)
                .collect();
            idx.sort_unstable();
            Some(idx)
        }
        _ => None,
    };
    let projected = match &feature_subset {
        Some(idx) => LabeledSet {
            features: data
                .features
                .iter()
                .map(|r| idx.iter().map(|&i| r[i]).collect())
                .collect(),
            labels: data.labels.clone(),
            classes: data.classes.clone(),
        },
        None => data.clone(),
    };
    let net = Mlp::fit(&projected, &config.mlp);
    if !net.is_finite() {
        return Err(ForecastError::Diverged);
    }
    Ok(ClassifierModel {
        model_id: format!("mlp-h{}-s{}", config.mlp.hidden, config.mlp.seed),
        classes: data.classes.clone(),
        input_dim: data.dim(),
        feature_subset,
        params: ModelParams::Batch(net),
        calibrator: None,
    })
}

/// Builds a streaming kNN by consuming labeled rows in order.
pub fn train_streaming<'a, I>(
    stream: I,
    classes: Vec<String>,
    input_dim: usize,
    config: &StreamingConfig,
) -> Result<ClassifierModel, ForecastError>
where
    I: IntoIterator<Item = (&'a [f64], usize)>,
{
    if let Some(idx) = &config.feature_subset {
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != idx.len() || idx.iter().any(|&i| i >= input_dim) {
            return Err(ForecastError::InvalidConfig(
                "feature subset must be unique and in range".into(),
            ));
        }
    }
    let knn = StreamingKnn::new(config.k, config.window, classes.len())?;
    let mut model = ClassifierModel {
        model_id: format!("knn-k{}-w{}", config.k, config.window),
        classes,
        input_dim,
        feature_subset: config.feature_subset.clone(),
        params: ModelParams::Streaming(knn),
        calibrator: None,
    };
    for (x, y) in stream {
        model.update(x, y)?;
    }
    Ok(model)
}

/// Fits Platt scaling on a holdout disjoint from the training data. The
/// result never has a worse holdout Brier score than the raw model.
pub fn calibrate(
    model: &ClassifierModel,
    holdout: &LabeledSet,
) -> Result<ClassifierModel, ForecastError> {
    let raw: Vec<Vec<f64>> = holdout
        .features
        .iter()
        .map(|x| model.raw_scores(x))
        .collect::<Result<_, _>>()?;
    let mut calibrator = Calibrator::fit(&raw, &holdout.labels, model.n_classes())?;
    let after: Vec<Vec<f64>> = raw.iter().map(|r| calibrator.apply(r)).collect();
    if brier_score(&after, &holdout.labels) > brier_score(&raw, &holdout.labels) + 1e-6 {
        calibrator = Calibrator::identity(model.n_classes());
    }
    let mut out = model.clone();
    out.calibrator = Some(calibrator);
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::tests_support::blobs;
    use super::*;
    use crate::types::argmax;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separable_blobs_train_to_high_accuracy() {
        let data = blobs(200, 42);
        let model = train_batch(&data, &BatchConfig::default()).unwrap();
        let correct = data
            .features
            .iter()
            .zip(&data.labels)
            .filter(|(x, &y)| argmax(&model.scores(x).unwrap()) == y)
            .count();
        assert!(correct as f64 / 200.0 >= 0.99);
        let p = model.predict("s0", &data.features[0]).unwrap();
        assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(p.argmax(), data.labels[0]);
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(60, 3);
        let a = train_batch(&data, &BatchConfig::default()).unwrap();
        let b = train_batch(&data, &BatchConfig::default()).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = LabeledSet::new(
            vec![vec![0.0], vec![1.0]],
            vec![0, 0],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(
            train_batch(&data, &BatchConfig::default()),
            Err(ForecastError::DegenerateLabels(_))
        ));
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let mut data = blobs(10, 1);
        data.features[3][0] = f64::INFINITY;
        assert!(matches!(
            train_batch(&data, &BatchConfig::default()),
            Err(ForecastError::InvalidInput(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = train_batch(&blobs(40, 2), &BatchConfig::default()).unwrap();
        assert!(matches!(
            model.predict("x", &[1.0, 2.0, 3.0]),
            Err(ForecastError::Dimension { .. })
        ));
    }

    #[test]
    fn mi_selection_projects_features() {
        let mut data = blobs(100, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for row in &mut data.features {
            row.push(rng.random::<f64>());
        }
        let cfg = BatchConfig {
            mi_top: Some(2),
            ..BatchConfig::default()
        };
        let model = train_batch(&data, &cfg).unwrap();
        assert_eq!(model.feature_subset, Some(vec![0, 1]));
        assert_eq!(model.input_dim, 3);
    }

    #[test]
    fn document_round_trip_checks_version() {
        let model = train_batch(&blobs(40, 5), &BatchConfig::default()).unwrap();
        let doc = model.to_document();
        assert_eq!(ClassifierModel::from_document(&doc).unwrap(), model);
        let mut bad = doc.clone();
        bad["format"] = "workbench-model/0".into();
        assert!(matches!(
            ClassifierModel::from_document(&bad),
            Err(ForecastError::VersionMismatch { .. })
        ));
    }

    #[test]
    fn calibration_keeps_simplex_and_does_not_hurt_brier() {
        let train = blobs(100, 6);
        let holdout = blobs(100, 7);
        let model = train_batch(&train, &BatchConfig::default()).unwrap();
        let cal = calibrate(&model, &holdout).unwrap();
        let probs = |m: &ClassifierModel| -> Vec<Vec<f64>> {
            holdout
                .features
                .iter()
                .map(|x| m.scores(x).unwrap())
                .collect()
        };
        assert!(
            brier_score(&probs(&cal), &holdout.labels)
                <= brier_score(&probs(&model), &holdout.labels) + 1e-6
        );
        for p in probs(&cal) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(cal.predict("x", &holdout.features[0]).unwrap().calibrated);
    }

    #[test]
    fn streaming_model_learns_incrementally() {
        let data = blobs(50, 9);
        let stream = data
            .features
            .iter()
            .map(|r| r.as_slice())
            .zip(data.labels.iter().copied());
        let mut model =
            train_streaming(stream, data.classes.clone(), 2, &StreamingConfig::default()).unwrap();
        assert_eq!(model.mode(), ModelMode::Streaming);
        let p = model.scores(&[2.0, 2.0]).unwrap();
        assert!(p[1] > 0.9);
        model.update(&[2.0, 2.0], 0).unwrap();
        let cold = train_streaming(
            std::iter::empty(),
            data.classes.clone(),
            2,
            &StreamingConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            cold.scores(&[0.0, 0.0]),
            Err(ForecastError::ColdModel)
        ));
    }
}
