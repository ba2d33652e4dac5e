//! Quality-inspection state behind the API: stored samples, the current
//! batch model and the active-learning round that keeps the annotation
//! queue fed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

use workbench_core::active_learning::{
    select_pool, HintRef, PoolContext, StrategyName, StrategyParams,
};
use workbench_core::forecasting::{train_batch, BatchConfig, ClassifierModel, ProbaModel};
use workbench_core::types::{GrayImage, LabeledSet, Sample};
use workbench_core::Exec;

use crate::config::{ActiveLearningConfig, QualityConfig};
use crate::error::ApiError;

/// Committee size when the strategy is query-by-committee.
const COMMITTEE: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSample {
    pub sample: Sample,
    /// Held out from the active-learning pool; used only for evaluation.
    #[serde(default)]
    pub holdout: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<GrayImage>,
}

impl StoredSample {
    /// Real, unlabeled and not held out.
    pub fn in_pool(&self) -> bool {
        !self.holdout && self.sample.label().is_none() && self.sample.provenance().is_real()
    }
}

/// A sample chosen for annotation in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub sample_id: String,
    pub score: f64,
    pub hints: Vec<HintRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub version: u64,
    pub trained_on: usize,
    pub model_id: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub total: usize,
    pub labeled: usize,
    pub holdout: usize,
    /// Real, unlabeled, not held out and not waiting in the queue.
    pub pool: usize,
}

pub struct Quality {
    config: QualityConfig,
    al: ActiveLearningConfig,
    samples: BTreeMap<String, StoredSample>,
    /// Insertion order, which fixes the pool order.
    order: Vec<String>,
    in_flight: HashSet<String>,
    model: Option<ClassifierModel>,
    info: ModelInfo,
    round: u64,
}

impl Quality {
    pub fn new(config: QualityConfig, al: ActiveLearningConfig) -> Self {
        Self {
            config,
            al,
            samples: BTreeMap::new(),
            order: Vec::new(),
            in_flight: HashSet::new(),
            model: None,
            info: ModelInfo::default(),
            round: 0,
        }
    }

    pub fn classes(&self) -> &[String] {
        &self.config.classes
    }

    pub fn good_class(&self) -> &str {
        &self.config.good_class
    }

    pub fn dim(&self) -> Option<usize> {
        self.order
            .first()
            .map(|id| self.samples[id].sample.features().len())
    }

    pub fn get(&self, id: &str) -> Option<&StoredSample> {
        self.samples.get(id)
    }

    pub fn model(&self) -> Option<&ClassifierModel> {
        self.model.as_ref()
    }

    pub fn info(&self) -> &ModelInfo {
        &self.info
    }

    /// Checks a sample against the stored ones without inserting it.
    pub fn validate(&self, s: &StoredSample) -> Result<(), ApiError> {
        if self.samples.contains_key(&s.sample.id) {
            return Err(ApiError::conflict(
                "duplicate_sample",
                format!("sample {:?} already exists", s.sample.id),
            ));
        }
        if s.sample.features().is_empty() {
            return Err(ApiError::bad_request(format!(
                "sample {:?} has no features",
                s.sample.id
            )));
        }
        if let Some(d) = self.dim() {
            if s.sample.features().len() != d {
                return Err(ApiError::bad_request(format!(
                    "sample {:?} has {} features, expected {d}",
                    s.sample.id,
                    s.sample.features().len()
                )));
            }
        }
        if let Some(label) = s.sample.label() {
            self.check_label(label)?;
        }
        Ok(())
    }

    pub fn check_label(&self, label: &str) -> Result<(), ApiError> {
        if self.config.classes.iter().any(|c| c == label) {
            Ok(())
        } else {
            Err(ApiError::bad_request(format!("unknown label {label:?}"))
                .with_details(serde_json::json!({ "classes": self.config.classes })))
        }
    }

    pub fn insert(&mut self, s: StoredSample) {
        self.order.push(s.sample.id.clone());
        self.samples.insert(s.sample.id.clone(), s);
    }

    /// Sets the label of an answered sample and returns the updated record.
    pub fn set_label(&mut self, sample_id: &str, label: &str) -> Result<StoredSample, ApiError> {
        self.in_flight.remove(sample_id);
        let s = self
            .samples
            .get_mut(sample_id)
            .ok_or_else(|| ApiError::not_found("sample", sample_id))?;
        s.sample
            .set_label(label)
            .map_err(|e| ApiError::conflict("already_labeled", e.to_string()))?;
        Ok(s.clone())
    }

    pub fn counts(&self) -> SampleCounts {
        let mut c = SampleCounts {
            total: self.samples.len(),
            ..SampleCounts::default()
        };
        for s in self.samples.values() {
            if s.holdout {
                c.holdout += 1;
            } else if s.sample.label().is_some() {
                c.labeled += 1;
            } else if s.in_pool() && !self.in_flight.contains(&s.sample.id) {
                c.pool += 1;
            }
        }
        c
    }

    fn class_index(&self, label: &str) -> Option<usize> {
        self.config.classes.iter().position(|c| c == label)
    }

    /// Labeled, non-holdout samples in insertion order.
    pub fn training_set(&self) -> Option<LabeledSet> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for id in &self.order {
            let s = &self.samples[id];
            if s.holdout || !s.sample.provenance().is_real() {
                continue;
            }
            if let Some(y) = s.sample.label().and_then(|l| self.class_index(l)) {
                features.push(s.sample.features().to_vec());
                labels.push(y);
            }
        }
        LabeledSet::new(features, labels, self.config.classes.clone()).ok()
    }

    /// Labeled images usable as a nearest-neighbor gallery.
    pub fn gallery(&self) -> Vec<(String, String, GrayImage)> {
        self.order
            .iter()
            .filter_map(|id| {
                let s = &self.samples[id];
                match (&s.image, s.sample.label(), s.holdout) {
                    (Some(img), Some(label), false) => {
                        Some((id.clone(), label.to_string(), img.clone()))
                    }
                    _ => None,
                }
            })
            .collect()
    }

    /// Features of every non-holdout sample, used as surrogate background.
    pub fn background(&self) -> Vec<Vec<f64>> {
        self.order
            .iter()
            .map(|id| &self.samples[id])
            .filter(|s| !s.holdout)
            .map(|s| s.sample.features().to_vec())
            .collect()
    }

    /// Retrains when new labels arrived and at least two classes are
    /// present. Returns the new model info when a model was trained.
    pub fn retrain(&mut self) -> Result<Option<ModelInfo>, ApiError> {
        let Some(set) = self.training_set() else {
            return Ok(None);
        };
        let present = set.class_counts().iter().filter(|&&c| c > 0).count();
        if present < 2 || set.len() == self.info.trained_on {
            return Ok(None);
        }
        let config = self.batch_config(self.info.version);
        let model = train_batch(&set, &config)?;
        self.info = ModelInfo {
            version: self.info.version + 1,
            trained_on: set.len(),
            model_id: Some(model.model_id.clone()),
        };
        self.model = Some(model);
        Ok(Some(self.info.clone()))
    }

    fn batch_config(&self, salt: u64) -> BatchConfig {
        let mut mlp = self.config.mlp.clone();
        mlp.seed = self.al.seed.wrapping_add(salt);
        BatchConfig {
            mlp,
            ..BatchConfig::default()
        }
    }

    /// Picks the next batch from the pool with the configured strategy.
    /// Without a model the batch is drawn at random.
    pub fn select_batch(&mut self, exec: Exec) -> Result<Vec<Selected>, ApiError> {
        let pool_ids: Vec<String> = self
            .order
            .iter()
            .filter(|id| {
                let s = &self.samples[*id];
                s.in_pool() && !self.in_flight.contains(*id)
            })
            .cloned()
            .collect();
        if pool_ids.is_empty() || self.al.batch == 0 {
            return Ok(Vec::new());
        }
        let seed = self.al.seed.wrapping_add(self.round);
        self.round += 1;
        let b = self.al.batch.min(pool_ids.len());
        let strategy = self.al.strategy;
        let picks: Vec<(usize, f64)> = match (&self.model, strategy) {
            (None, _) | (_, StrategyName::Random) => {
                let mut idx: Vec<usize> = (0..pool_ids.len()).collect();
                idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                idx.into_iter().take(b).map(|i| (i, 0.0)).collect()
            }
            (Some(model), _) => {
                let pool: Vec<Vec<f64>> = pool_ids
                    .iter()
                    .map(|id| self.samples[id].sample.features().to_vec())
                    .collect();
                let set = self.training_set();
                let labeled: Vec<Vec<f64>> =
                    set.as_ref().map(|s| s.features.clone()).unwrap_or_default();
                let committee_models: Vec<ClassifierModel> = match (strategy, &set) {
                    (StrategyName::QbcVoteEntropy, Some(set)) => self.committee(set)?,
                    _ => Vec::new(),
                };
                let committee: Vec<&dyn ProbaModel> = committee_models
                    .iter()
                    .map(|m| m as &dyn ProbaModel)
                    .collect();
                let ctx = PoolContext {
                    pool: &pool,
                    labeled: &labeled,
                    model: Some(model),
                    committee: &committee,
                };
                select_pool(&ctx, &StrategyParams::named(strategy), b, seed, exec)?.picks
            }
        };
        let gallery_ready = !self.gallery().is_empty();
        let mut out = Vec::with_capacity(picks.len());
        for (i, score) in picks {
            let id = pool_ids[i].clone();
            let mut hints = Vec::new();
            if self.samples[&id].image.is_some() && gallery_ready {
                hints.push(HintRef {
                    explanation_id: format!("xnn-{id}"),
                    kind: "nearest_neighbor".into(),
                });
            }
            if self.model.is_some() {
                hints.push(HintRef {
                    explanation_id: format!("xfr-{id}"),
                    kind: "feature_ranking".into(),
                });
            }
            self.in_flight.insert(id.clone());
            out.push(Selected {
                sample_id: id,
                score,
                hints,
            });
        }
        Ok(out)
    }

    /// Bootstrap committee trained on resamples of the labeled set.
    fn committee(&self, set: &LabeledSet) -> Result<Vec<ClassifierModel>, ApiError> {
        let mut models = Vec::with_capacity(COMMITTEE);
        for m in 0..COMMITTEE as u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.al.seed ^ (m + 1) ^ (self.round << 8));
            let idx: Vec<usize> = (0..set.len())
                .map(|_| rand::Rng::random_range(&mut rng, 0..set.len()))
                .collect();
            let boot = set.subset(&idx);
            let boot = if boot.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
                set.clone()
            } else {
                boot
            };
            models.push(train_batch(&boot, &self.batch_config(100 + m))?);
        }
        Ok(models)
    }
}
