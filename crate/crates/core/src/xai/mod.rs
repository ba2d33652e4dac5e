//! Explanations for predictions, tailored to who is looking: surrogate
//! feature rankings, concept rankings with redaction, occlusion saliency,
//! reference-difference anomaly maps, nearest labeled images and optional
//! enrichment from an external source.

pub mod anomaly;
pub mod concepts;
pub mod enrich;
pub mod saliency;
pub mod ssim;
pub mod surrogate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecasting::ForecastError;
use crate::types::GrayImage;

pub use anomaly::anomaly_map;
pub use concepts::{
    demand_concept_map, image_concept_map, map_to_concepts, redact, ConceptMap, OTHER_CONCEPT,
};
pub use enrich::{
    enrich, DisabledClient, EnrichmentClient, EnrichmentItem, EnrichmentRequest, FixtureClient,
};
pub use saliency::{saliency_occlusion, FeaturizedImageModel, ImageModel};
pub use ssim::{nearest_hint, ssim, ssim_direct, GalleryEntry, SsimParams};
pub use surrogate::{explain_surrogate, DecisionTree, SurrogateConfig};

/// Warning code: the surrogate agrees with the model on too few samples.
pub const WARN_LOW_FIDELITY: &str = "low_fidelity";
/// Warning code: the surrogate tree never split.
pub const WARN_DEGENERATE: &str = "degenerate_surrogate";
/// Warning code: the enrichment source failed or timed out.
pub const WARN_ENRICHMENT: &str = "enrichment_unavailable";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum XaiError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("image size mismatch: {0}")]
    SizeMismatch(String),
    #[error("empty gallery")]
    EmptyGallery,
    #[error("concept map is empty")]
    EmptyConceptMap,
    #[error("enrichment failed: {0}")]
    Enrichment(String),
    #[error(transparent)]
    Model(#[from] ForecastError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationKind {
    FeatureRanking,
    ConceptRanking,
    SaliencyMap,
    AnomalyMap,
    NearestNeighbor,
}

impl ExplanationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExplanationKind::FeatureRanking => "feature_ranking",
            ExplanationKind::ConceptRanking => "concept_ranking",
            ExplanationKind::SaliencyMap => "saliency_map",
            ExplanationKind::AnomalyMap => "anomaly_map",
            ExplanationKind::NearestNeighbor => "nearest_neighbor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Redaction {
    Full,
    #[default]
    ConceptOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub concept: String,
    pub label: String,
    pub importance: f64,
    /// Member features; omitted under concept-only redaction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExplanationPayload {
    FeatureRanking {
        features: Vec<RankedFeature>,
        fidelity: f64,
    },
    ConceptRanking {
        concepts: Vec<ConceptScore>,
    },
    SaliencyMap {
        map: GrayImage,
    },
    AnomalyMap {
        map: GrayImage,
    },
    NearestNeighbor {
        sample_ref: String,
        label: String,
        similarity: f64,
    },
}

impl ExplanationPayload {
    pub fn kind(&self) -> ExplanationKind {
        match self {
            ExplanationPayload::FeatureRanking { .. } => ExplanationKind::FeatureRanking,
            ExplanationPayload::ConceptRanking { .. } => ExplanationKind::ConceptRanking,
            ExplanationPayload::SaliencyMap { .. } => ExplanationKind::SaliencyMap,
            ExplanationPayload::AnomalyMap { .. } => ExplanationKind::AnomalyMap,
            ExplanationPayload::NearestNeighbor { .. } => ExplanationKind::NearestNeighbor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub id: String,
    pub prediction_ref: String,
    pub kind: ExplanationKind,
    pub payload: ExplanationPayload,
    pub redaction: Redaction,
    pub audience: String,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enrichment: Vec<EnrichmentItem>,
}

impl Explanation {
    pub fn new(
        id: impl Into<String>,
        prediction_ref: impl Into<String>,
        payload: ExplanationPayload,
    ) -> Self {
        Self {
            id: id.into(),
            prediction_ref: prediction_ref.into(),
            kind: payload.kind(),
            payload,
            redaction: Redaction::Full,
            audience: String::new(),
            warnings: Vec::new(),
            enrichment: Vec::new(),
        }
    }

    pub fn has_warning(&self, code: &str) -> bool {
        self.warnings.iter().any(|w| w == code)
    }
}
