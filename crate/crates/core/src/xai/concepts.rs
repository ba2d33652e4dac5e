//! Aggregation of feature importances into human-level concepts, and the
//! redaction that hides raw feature identifiers from end users.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::{ConceptScore, Explanation, ExplanationPayload, RankedFeature, Redaction, XaiError};

/// Concept that collects every feature without a mapping.
pub const OTHER_CONCEPT: &str = "other";

/// Many-to-one mapping from feature identifiers to concepts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConceptMap {
    pub entries: BTreeMap<String, String>,
    /// Human-readable label per concept.
    pub labels: BTreeMap<String, String>,
}

impl ConceptMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, feature: &str, concept: &str, label: &str) -> Self {
        self.entries
            .insert(feature.to_string(), concept.to_string());
        self.labels
            .entry(concept.to_string())
            .or_insert_with(|| label.to_string());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn concept_of(&self, feature: &str) -> &str {
        self.entries
            .get(feature)
            .map_or(OTHER_CONCEPT, String::as_str)
    }

    pub fn label_of(&self, concept: &str) -> String {
        self.labels.get(concept).cloned().unwrap_or_else(|| {
            if concept == OTHER_CONCEPT {
                "Other factors".into()
            } else {
                concept.replace('_', " ")
            }
        })
    }
}

/// Concepts for the 68 image features: block means grouped into a 3x3
/// region grid, plus print density, contrast and edge sharpness.
pub fn image_concept_map() -> ConceptMap {
    let grid = crate::simulation::image::FEATURE_GRID;
    let rows = ["top", "middle", "bottom"];
    let cols = ["left", "center", "right"];
    let mut map = ConceptMap::new();
    for r in 0..grid {
        for c in 0..grid {
            let (rr, cc) = (rows[(r * 3) / grid], cols[(c * 3) / grid]);
            let concept = format!("region_{rr}_{cc}");
            let label = format!("Print appearance, {rr} {cc} area");
            map = map.with(&format!("block_r{r}_c{c}"), &concept, &label);
        }
    }
    map.with("global_mean", "print_density", "Overall print density")
        .with("ink_fraction", "print_density", "Overall print density")
        .with("global_std", "contrast", "Print contrast")
        .with("gradient_energy", "edge_sharpness", "Edge sharpness")
}

/// Concepts for the two-fold occurrence features.
pub fn demand_concept_map(lags: usize) -> ConceptMap {
    let mut map = ConceptMap::new();
    for k in 1..=lags {
        map = map.with(
            &format!("occurrence_lag_{k}"),
            "recent_activity",
            "Recent ordering activity",
        );
    }
    map.with(
        "period_index",
        "calendar_position",
        "Position in the planning calendar",
    )
    .with(
        "rolling_nonzero_rate",
        "order_frequency",
        "Historical order frequency",
    )
}

/// Sums member importances per concept. Concepts are ranked by importance,
/// ties alphabetically. `strict` refuses an empty map instead of lumping
/// everything into [`OTHER_CONCEPT`].
pub fn map_to_concepts(
    ranking: &[RankedFeature],
    map: &ConceptMap,
    redaction: Redaction,
    strict: bool,
) -> Result<Vec<ConceptScore>, XaiError> {
    if strict && map.is_empty() {
        return Err(XaiError::EmptyConceptMap);
    }
    let mut agg: BTreeMap<String, (f64, Vec<String>)> = BTreeMap::new();
    for f in ranking {
        let slot = agg
            .entry(map.concept_of(&f.feature).to_string())
            .or_default();
        slot.0 += f.importance;
        slot.1.push(f.feature.clone());
    }
    let mut out: Vec<ConceptScore> = agg
        .into_iter()
        .map(|(concept, (importance, members))| ConceptScore {
            label: map.label_of(&concept),
            concept,
            importance,
            members: (redaction == Redaction::Full).then_some(members),
        })
        .collect();
    out.sort_by(|a, b| {
        b.importance
            .total_cmp(&a.importance)
            .then_with(|| a.concept.cmp(&b.concept))
    });
    Ok(out)
}

/// Applies a redaction level to any explanation. Under concept-only
/// redaction, feature rankings become concept rankings and member lists are
/// dropped; image and neighbor payloads carry no feature identifiers and
/// pass through.
pub fn redact(explanation: &Explanation, level: Redaction, map: &ConceptMap) -> Explanation {
    let mut out = explanation.clone();
    out.redaction = level;
    if level == Redaction::Full {
        return out;
    }
    match &explanation.payload {
        ExplanationPayload::FeatureRanking { features, .. } => {
            let concepts =
                map_to_concepts(features, map, Redaction::ConceptOnly, false).unwrap_or_default();
            out.payload = ExplanationPayload::ConceptRanking { concepts };
            out.kind = out.payload.kind();
        }
        ExplanationPayload::ConceptRanking { concepts } => {
            out.payload = ExplanationPayload::ConceptRanking {
                concepts: concepts
                    .iter()
                    .map(|c| ConceptScore {
                        members: None,
                        ..c.clone()
                    })
                    .collect(),
            };
        }
        _ => {}
    }
    out
}
