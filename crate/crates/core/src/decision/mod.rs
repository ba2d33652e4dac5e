//! Heuristic decision recommendations, ranked with human feedback, plus
//! capture of explicit and implicit feedback and user knowledge.

pub mod knowledge;
pub mod rules;

use serde::{Deserialize, Serialize};
use std::sync::RwLock;
use thiserror::Error;

use crate::types::Timestamp;

pub use knowledge::{FactSource, KnowledgeBase, KnowledgeFact, Triple};
pub use rules::{
    parse_context, parse_rules, CompareOp, Comparison, Condition, Context, SEED_RULES,
};

/// Weight of the feedback term in the option score.
pub const FEEDBACK_WEIGHT: f64 = 0.3;
/// An ignored option counts as this fraction of a negative vote.
pub const IGNORE_WEIGHT: f64 = 0.25;
/// Id of the option returned when no rule matches.
pub const FALLBACK_ID: &str = "fallback";
pub const FALLBACK_ACTION: &str = "no action / consult planner";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecisionError {
    #[error("rule file line {line}: {message}")]
    RuleFile { line: usize, message: String },
    #[error("context is missing fields: {}", .0.join(", "))]
    MissingFields(Vec<String>),
    #[error("invalid context: {0}")]
    InvalidContext(String),
    #[error("unknown option {0:?}")]
    UnknownOption(String),
    #[error("invalid feedback: {0}")]
    InvalidFeedback(String),
    #[error("invalid triple: {0}")]
    InvalidTriple(String),
    #[error("knowledge storage failed: {0}")]
    Storage(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub positive: u64,
    pub negative: u64,
    pub implicit_views: u64,
    pub implicit_ignores: u64,
}

impl Tally {
    /// `(pos - neg_eff) / (pos + neg_eff + 1)` with ignores weighted as a
    /// fraction of a negative. Views do not count.
    pub fn feedback_term(&self) -> f64 {
        let pos = self.positive as f64;
        let neg = self.negative as f64 + IGNORE_WEIGHT * self.implicit_ignores as f64;
        (pos - neg) / (pos + neg + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOption {
    pub id: String,
    pub condition: Condition,
    pub action_text: String,
    pub base_score: f64,
    #[serde(default)]
    pub tally: Tally,
}

impl DecisionOption {
    pub fn new(
        id: impl Into<String>,
        condition: Condition,
        action_text: impl Into<String>,
        base_score: f64,
    ) -> Self {
        Self {
            id: id.into(),
            condition,
            action_text: action_text.into(),
            base_score,
            tally: Tally::default(),
        }
    }

    pub fn fallback() -> Self {
        Self::new(FALLBACK_ID, Condition::always(), FALLBACK_ACTION, 0.0)
    }

    pub fn score(&self) -> f64 {
        self.base_score + FEEDBACK_WEIGHT * self.tally.feedback_term()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOption {
    #[serde(flatten)]
    pub option: DecisionOption,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectKind {
    Prediction,
    Explanation,
    Option,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    ExplicitPositive,
    ExplicitNegative,
    Rating(u8),
    ImplicitView,
    ImplicitIgnore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    #[serde(default)]
    pub id: String,
    pub subject_kind: SubjectKind,
    pub subject_ref: String,
    pub signal: Signal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_text: Option<String>,
    #[serde(default)]
    pub actor: String,
    #[serde(default)]
    pub ts: Timestamp,
}

impl FeedbackRecord {
    pub fn validate(&self) -> Result<(), DecisionError> {
        if self.subject_ref.trim().is_empty() {
            return Err(DecisionError::InvalidFeedback(
                "subject_ref must be nonempty".into(),
            ));
        }
        if let Signal::Rating(r) = self.signal {
            if !(1..=5).contains(&r) {
                return Err(DecisionError::InvalidFeedback(format!(
                    "rating {r} outside 1..5"
                )));
            }
        }
        Ok(())
    }
}

/// Holds the registered options and their feedback tallies. Readers get a
/// consistent snapshot; tally updates are serialized.
pub struct Recommender {
    options: RwLock<Vec<DecisionOption>>,
}

impl Recommender {
    pub fn new(options: Vec<DecisionOption>) -> Self {
        Self {
            options: RwLock::new(options),
        }
    }

    pub fn from_rules(text: &str) -> Result<Self, DecisionError> {
        Ok(Self::new(parse_rules(text)?))
    }

    pub fn options(&self) -> Vec<DecisionOption> {
        self.options
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn contains(&self, id: &str) -> bool {
        id == FALLBACK_ID
            || self
                .options
                .read()
                .unwrap_or_else(|e| e.into_inner())
                .iter()
                .any(|o| o.id == id)
    }

    /// Matching options by descending score, ties by id. Never empty: with
    /// no match the fallback option is returned alone.
    pub fn recommend(&self, ctx: &Context) -> Result<Vec<RankedOption>, DecisionError> {
        let options = self.options.read().unwrap_or_else(|e| e.into_inner());
        let mut missing: Vec<String> = options
            .iter()
            .flat_map(|o| o.condition.fields())
            .filter(|f| !ctx.contains_key(*f))
            .map(str::to_string)
            .collect();
        missing.sort();
        missing.dedup();
        if !missing.is_empty() {
            return Err(DecisionError::MissingFields(missing));
        }
        let mut ranked: Vec<RankedOption> = Vec::new();
        for o in options.iter() {
            if o.condition.eval(ctx)? {
                ranked.push(RankedOption {
                    score: o.score(),
                    option: o.clone(),
                });
            }
        }
        ranked.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.option.id.cmp(&b.option.id))
        });
        if ranked.is_empty() {
            let fallback = DecisionOption::fallback();
            ranked.push(RankedOption {
                score: fallback.score(),
                option: fallback,
            });
        }
        Ok(ranked)
    }

    /// Updates the option tally for option feedback. Ratings of 4 or 5 count
    /// as positive, 1 or 2 as negative, 3 is neutral. Returns the new tally,
    /// or `None` when the record is not about an option.
    pub fn apply_feedback(&self, record: &FeedbackRecord) -> Result<Option<Tally>, DecisionError> {
        record.validate()?;
        if record.subject_kind != SubjectKind::Option {
            return Ok(None);
        }
        if record.subject_ref == FALLBACK_ID {
            return Ok(Some(Tally::default()));
        }
        let mut options = self.options.write().unwrap_or_else(|e| e.into_inner());
        let Some(opt) = options.iter_mut().find(|o| o.id == record.subject_ref) else {
            return Err(DecisionError::UnknownOption(record.subject_ref.clone()));
        };
        let t = &mut opt.tally;
        match record.signal {
            Signal::ExplicitPositive | Signal::Rating(4..=5) => t.positive += 1,
            Signal::ExplicitNegative | Signal::Rating(1..=2) => t.negative += 1,
            Signal::Rating(_) => {}
            Signal::ImplicitView => t.implicit_views += 1,
            Signal::ImplicitIgnore => t.implicit_ignores += 1,
        }
        Ok(Some(*t))
    }

    /// Replaces a tally outright, used when rebuilding from the event log.
    pub fn set_tally(&self, id: &str, tally: Tally) -> Result<(), DecisionError> {
        let mut options = self.options.write().unwrap_or_else(|e| e.into_inner());
        let opt = options
            .iter_mut()
            .find(|o| o.id == id)
            .ok_or_else(|| DecisionError::UnknownOption(id.to_string()))?;
        opt.tally = tally;
        Ok(())
    }
}
