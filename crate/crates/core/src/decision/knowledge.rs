//! Knowledge captured from users, stored as subject-relation-object triples.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::{Arc, RwLock};

use super::DecisionError;
use crate::bus::DocumentStore;
use crate::types::{now_ms, Timestamp};

/// Document-store key prefix for facts.
pub const KNOWLEDGE_PREFIX: &str = "knowledge/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactSource {
    UserFeedback,
    Seed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        relation: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Self {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }

    fn key(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.subject, &self.relation, &self.object] {
            h.update((part.len() as u64).to_be_bytes());
            h.update(part.as_bytes());
        }
        format!("{KNOWLEDGE_PREFIX}{}", &hex::encode(h.finalize())[..32])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeFact {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub source: FactSource,
    pub actor: String,
    pub ts: Timestamp,
}

impl KnowledgeFact {
    pub fn triple(&self) -> Triple {
        Triple::new(&self.subject, &self.relation, &self.object)
    }
}

/// Fact collection deduplicated on the triple. The first capture wins; a
/// repeated triple returns the stored fact unchanged.
pub struct KnowledgeBase {
    facts: RwLock<Vec<KnowledgeFact>>,
    store: Option<Arc<DocumentStore>>,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        Self {
            facts: RwLock::new(Vec::new()),
            store: None,
        }
    }
}

impl KnowledgeBase {
    /// Opens a knowledge base backed by a document store, loading any facts
    /// already stored there.
    pub fn with_store(store: Arc<DocumentStore>) -> Result<Self, DecisionError> {
        let mut facts = Vec::new();
        for key in store.keys_with_prefix(KNOWLEDGE_PREFIX) {
            let fact: KnowledgeFact = store
                .get_as(&key)
                .map_err(|e| DecisionError::Storage(e.to_string()))?;
            facts.push(fact);
        }
        facts.sort_by_key(|f| f.ts);
        Ok(Self {
            facts: RwLock::new(facts),
            store: Some(store),
        })
    }

    /// Returns the stored fact and whether it was newly added.
    pub fn capture(
        &self,
        actor: &str,
        triple: Triple,
        source: FactSource,
    ) -> Result<(KnowledgeFact, bool), DecisionError> {
        for (name, v) in [
            ("subject", &triple.subject),
            ("relation", &triple.relation),
            ("object", &triple.object),
        ] {
            if v.trim().is_empty() {
                return Err(DecisionError::InvalidTriple(format!(
                    "{name} must be nonempty"
                )));
            }
        }
        let mut facts = self.facts.write().unwrap_or_else(|e| e.into_inner());
        if let Some(f) = facts.iter().find(|f| f.triple() == triple) {
            return Ok((f.clone(), false));
        }
        let fact = KnowledgeFact {
            subject: triple.subject.clone(),
            relation: triple.relation.clone(),
            object: triple.object.clone(),
            source,
            actor: actor.to_string(),
            ts: now_ms(),
        };
        if let Some(store) = &self.store {
            store
                .put_as(&triple.key(), &fact)
                .map_err(|e| DecisionError::Storage(e.to_string()))?;
        }
        facts.push(fact.clone());
        Ok((fact, true))
    }

    /// Facts filtered by subject and/or source, in capture order.
    pub fn query(&self, subject: Option<&str>, source: Option<FactSource>) -> Vec<KnowledgeFact> {
        self.facts
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .filter(|f| subject.is_none_or(|s| f.subject == s))
            .filter(|f| source.is_none_or(|s| f.source == s))
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.facts.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
