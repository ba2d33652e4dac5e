//! Access policies over API resources, with redaction levels for
//! explanations.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use super::SecurityError;
use crate::xai::Redaction;

pub const ROLES: [&str; 4] = ["annotator", "planner", "admin", "robot"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Read,
    Write,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Read => "read",
            Action::Write => "write",
        }
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" => Ok(Action::Read),
            "write" => Ok(Action::Write),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Allow,
    Deny,
}

impl FromStr for Effect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allow" => Ok(Effect::Allow),
            "deny" => Ok(Effect::Deny),
            other => Err(format!("unknown effect {other:?}")),
        }
    }
}

/// A path glob. Segments are literal or `*`. A `*` matches exactly one
/// segment, except in last position where it matches one or more.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourcePattern {
    raw: String,
    segments: Vec<String>,
}

fn valid_literal(seg: &str) -> bool {
    !seg.is_empty()
        && seg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.~{}".contains(c))
}

impl ResourcePattern {
    pub fn parse(raw: &str) -> Result<Self, String> {
        if !raw.starts_with('/') {
            return Err(format!("pattern {raw:?} must start with '/'"));
        }
        let segments: Vec<String> = raw.split('/').skip(1).map(str::to_string).collect();
        if segments.iter().any(|s| s.is_empty()) && raw != "/" {
            return Err(format!("pattern {raw:?} has an empty segment"));
        }
        let segments: Vec<String> = segments.into_iter().filter(|s| !s.is_empty()).collect();
        for s in &segments {
            if s != "*" && !valid_literal(s) {
                return Err(format!("pattern {raw:?} has invalid segment {s:?}"));
            }
        }
        Ok(Self {
            raw: raw.to_string(),
            segments,
        })
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    /// Number of literal segments; higher is more specific.
    pub fn specificity(&self) -> usize {
        self.segments.iter().filter(|s| *s != "*").count()
    }

    pub fn matches(&self, resource: &str) -> bool {
        let parts: Vec<&str> = resource.split('/').filter(|s| !s.is_empty()).collect();
        let n = self.segments.len();
        let tail_glob = self.segments.last().is_some_and(|s| s == "*");
        if tail_glob {
            if parts.len() < n {
                return false;
            }
        } else if parts.len() != n {
            return false;
        }
        self.segments
            .iter()
            .zip(&parts)
            .all(|(seg, part)| seg == "*" || seg == part)
    }
}

impl fmt::Display for ResourcePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for ResourcePattern {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for ResourcePattern {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        ResourcePattern::parse(&raw).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub id: String,
    /// A role name or `*` for any role.
    pub role: String,
    pub resource: ResourcePattern,
    pub action: Action,
    pub effect: Effect,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub redaction: Option<Redaction>,
}

impl Policy {
    fn applies(&self, role: &str, resource: &str, action: Action) -> bool {
        (self.role == "*" || self.role == role)
            && self.action == action
            && self.resource.matches(resource)
    }

    /// Pattern specificity first, then a named role over `*`.
    fn rank(&self) -> (usize, bool) {
        (self.resource.specificity(), self.role != "*")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub effect: Effect,
    pub redaction: Redaction,
    /// Winning policy, `None` under default deny.
    pub policy_id: Option<String>,
}

impl Decision {
    pub fn allowed(&self) -> bool {
        self.effect == Effect::Allow
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub policies: Vec<Policy>,
}

impl PolicySet {
    pub fn new(policies: Vec<Policy>) -> Self {
        Self { policies }
    }

    /// Parses one policy per line:
    /// `effect role action pattern [full|concept_only]`. `#` starts a
    /// comment. Errors name the 1-based line.
    pub fn parse(text: &str) -> Result<Self, SecurityError> {
        let mut policies = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| SecurityError::PolicyParse { line, message };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if !(4..=5).contains(&fields.len()) {
                return Err(err(format!("expected 4 or 5 fields, got {}", fields.len())));
            }
            let effect: Effect = fields[0].parse().map_err(err)?;
            let role = fields[1];
            if role != "*" && !ROLES.contains(&role) {
                return Err(err(format!("unknown role {role:?}")));
            }
            let action: Action = fields[2].parse().map_err(err)?;
            let resource = ResourcePattern::parse(fields[3]).map_err(err)?;
            let redaction = match fields.get(4) {
                None => None,
                Some(&"full") => Some(Redaction::Full),
                Some(&"concept_only") => Some(Redaction::ConceptOnly),
                Some(other) => return Err(err(format!("unknown redaction {other:?}"))),
            };
            policies.push(Policy {
                id: format!("line-{line}"),
                role: role.to_string(),
                resource,
                action,
                effect,
                redaction,
            });
        }
        Ok(Self { policies })
    }

    /// Most specific matching policy wins, deny beats allow at equal rank,
    /// no match denies. Redaction comes from the winner, defaulting to
    /// concept-only.
    pub fn evaluate(&self, role: &str, resource: &str, action: Action) -> Decision {
        let mut best: Option<&Policy> = None;
        for p in self
            .policies
            .iter()
            .filter(|p| p.applies(role, resource, action))
        {
            best = match best {
                None => Some(p),
                Some(b) if p.rank() > b.rank() => Some(p),
                Some(b)
                    if p.rank() == b.rank()
                        && p.effect == Effect::Deny
                        && b.effect == Effect::Allow =>
                {
                    Some(p)
                }
                keep => keep,
            };
        }
        match best {
            Some(p) => Decision {
                effect: p.effect,
                redaction: p.redaction.unwrap_or_default(),
                policy_id: Some(p.id.clone()),
            },
            None => Decision {
                effect: Effect::Deny,
                redaction: Redaction::default(),
                policy_id: None,
            },
        }
    }
}

/// Policies that ship with the default configuration.
pub const DEFAULT_POLICIES: &str = "\
# effect  role       action  pattern              [redaction]
allow     annotator  read    /queue/*
allow     annotator  write   /labels
allow     annotator  read    /predictions/*
allow     annotator  read    /explanations/*      concept_only
allow     annotator  write   /feedback
allow     annotator  read    /events
allow     planner    read    /forecasts/*
allow     planner    write   /whatif
allow     planner    read    /options
allow     planner    write   /feedback
allow     planner    write   /knowledge
allow     planner    read    /knowledge
allow     planner    read    /predictions/*
allow     planner    read    /explanations/*      concept_only
allow     planner    read    /stream/*
allow     planner    read    /events
allow     robot      write   /samples
allow     robot      read    /intent/*
allow     robot      write   /intent/*
allow     robot      read    /events
allow     admin      read    /*                   full
allow     admin      write   /*
";

/// Holds the active policy set. Reloads swap the whole set atomically, so a
/// reader sees either the old or the new set.
pub struct PolicyManager {
    current: RwLock<Arc<PolicySet>>,
}

impl PolicyManager {
    pub fn new(set: PolicySet) -> Self {
        Self {
            current: RwLock::new(Arc::new(set)),
        }
    }

    pub fn current(&self) -> Arc<PolicySet> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn replace(&self, set: PolicySet) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(set);
    }

    pub fn evaluate(&self, role: &str, resource: &str, action: Action) -> Decision {
        self.current().evaluate(role, resource, action)
    }
}
