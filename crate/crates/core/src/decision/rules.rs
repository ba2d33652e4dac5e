//! Condition predicates and the rule file format.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::{DecisionError, DecisionOption};

/// Named numeric values a condition is evaluated against.
pub type Context = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl CompareOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CompareOp::Gt => lhs > rhs,
            CompareOp::Ge => lhs >= rhs,
            CompareOp::Lt => lhs < rhs,
            CompareOp::Le => lhs <= rhs,
            CompareOp::Eq => lhs == rhs,
            CompareOp::Ne => lhs != rhs,
        }
    }
}

impl FromStr for CompareOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            ">" => CompareOp::Gt,
            ">=" => CompareOp::Ge,
            "<" => CompareOp::Lt,
            "<=" => CompareOp::Le,
            "==" | "=" => CompareOp::Eq,
            "!=" => CompareOp::Ne,
            other => return Err(format!("unknown operator {other:?}")),
        })
    }
}

/// One `field op threshold` comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub field: String,
    pub op: CompareOp,
    pub threshold: f64,
}

/// Conjunction of comparisons. The empty condition always holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Condition {
    pub clauses: Vec<Comparison>,
}

impl Condition {
    pub fn always() -> Self {
        Self::default()
    }

    /// Parses `field op value [AND field op value ...]`. `AND` is case
    /// insensitive; `&&` is accepted too. Values may carry a leading `+`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if text.is_empty() || text.eq_ignore_ascii_case("true") {
            return Ok(Self::always());
        }
        let normalized = text.replace("&&", " AND ");
        let mut clauses = Vec::new();
        let mut current: Vec<&str> = Vec::new();
        let mut flush = |current: &mut Vec<&str>| -> Result<(), String> {
            clauses.push(Self::parse_clause(current)?);
            current.clear();
            Ok(())
        };
        for tok in normalized.split_whitespace() {
            if tok.eq_ignore_ascii_case("and") {
                flush(&mut current)?;
            } else {
                current.push(tok);
            }
        }
        flush(&mut current)?;
        Ok(Self { clauses })
    }

    fn parse_clause(tokens: &[&str]) -> Result<Comparison, String> {
        let joined: String = tokens.concat();
        let op_at = joined
            .find(['<', '>', '=', '!'])
            .ok_or_else(|| format!("clause {:?} has no comparison operator", tokens.join(" ")))?;
        let (field, rest) = joined.split_at(op_at);
        let op_len = if rest[1..].starts_with('=') { 2 } else { 1 };
        let (op, value) = rest.split_at(op_len);
        if field.is_empty() || !field.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(format!("invalid field name {field:?}"));
        }
        let op: CompareOp = op.parse()?;
        let threshold: f64 = value
            .trim_start_matches('+')
            .trim_end_matches('%')
            .parse()
            .map_err(|_| format!("invalid threshold {value:?}"))?;
        if !threshold.is_finite() {
            return Err(format!("threshold {value:?} is not finite"));
        }
        Ok(Comparison {
            field: field.to_string(),
            op,
            threshold,
        })
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.clauses.iter().map(|c| c.field.as_str())
    }

    /// Evaluates against a context. Missing fields are reported by name.
    pub fn eval(&self, ctx: &Context) -> Result<bool, DecisionError> {
        let missing: BTreeSet<String> = self
            .fields()
            .filter(|f| !ctx.contains_key(*f))
            .map(str::to_string)
            .collect();
        if !missing.is_empty() {
            return Err(DecisionError::MissingFields(missing.into_iter().collect()));
        }
        Ok(self
            .clauses
            .iter()
            .all(|c| c.op.holds(ctx[&c.field], c.threshold)))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = self
            .clauses
            .iter()
            .map(|c| format!("{} {} {}", c.field, c.op.as_str(), c.threshold))
            .collect();
        write!(f, "{}", parts.join(" AND "))
    }
}

impl Serialize for Condition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Condition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Condition::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// One line of a rule file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleLine {
    #[serde(default)]
    id: Option<String>,
    condition: String,
    action_text: String,
    base_score: f64,
}

/// Parses a rule file: one JSON object per line with `condition`,
/// `action_text`, `base_score` and an optional `id`. Blank lines and lines
/// starting with `#` are skipped. Errors name the 1-based line.
pub fn parse_rules(text: &str) -> Result<Vec<DecisionOption>, DecisionError> {
    let mut out: Vec<DecisionOption> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| DecisionError::RuleFile { line, message };
        let rule: RuleLine = serde_json::from_str(trimmed).map_err(|e| err(e.to_string()))?;
        let condition = Condition::parse(&rule.condition).map_err(err)?;
        if rule.action_text.trim().is_empty() {
            return Err(err("action_text must be nonempty".into()));
        }
        if !(0.0..=1.0).contains(&rule.base_score) {
            return Err(err(format!(
                "base_score {} outside [0, 1]",
                rule.base_score
            )));
        }
        let id = rule.id.unwrap_or_else(|| format!("opt-{line:03}"));
        if out.iter().any(|o| o.id == id) {
            return Err(err(format!("duplicate option id {id:?}")));
        }
        out.push(DecisionOption::new(
            id,
            condition,
            rule.action_text,
            rule.base_score,
        ));
    }
    Ok(out)
}

/// Parses `field=value,field=value` (`:` also accepted as separator) into a
/// context.
pub fn parse_context(text: &str) -> Result<Context, DecisionError> {
    let mut ctx = Context::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once(['=', ':']).ok_or_else(|| {
            DecisionError::InvalidContext(format!("expected field=value, got {part:?}"))
        })?;
        let v: f64 = v.trim().trim_start_matches('+').parse().map_err(|_| {
            DecisionError::InvalidContext(format!("value for {k:?} is not a number"))
        })?;
        if !v.is_finite() {
            return Err(DecisionError::InvalidContext(format!(
                "value for {k:?} is not finite"
            )));
        }
        ctx.insert(k.trim().to_string(), v);
    }
    Ok(ctx)
}

/// Placeholder rules shipped with the default configuration.
pub const SEED_RULES: &str = r#"# field op threshold, clauses joined with AND
{"id": "increase-order", "condition": "forecast_delta_pct > 20 AND stock_cover_days < 10", "action_text": "Increase the next purchase order", "base_score": 0.8}
{"id": "expedite", "condition": "forecast_delta_pct > 50 AND stock_cover_days < 5", "action_text": "Expedite delivery from the supplier", "base_score": 0.7}
{"id": "reduce-order", "condition": "forecast_delta_pct < -20 AND stock_cover_days > 30", "action_text": "Reduce the next purchase order", "base_score": 0.75}
{"id": "hold-stock", "condition": "occurrence_probability < 0.2 AND stock_cover_days > 20", "action_text": "Hold current stock and skip this ordering cycle", "base_score": 0.6}
{"id": "safety-stock", "condition": "occurrence_probability >= 0.6 AND stock_cover_days < 15", "action_text": "Raise the safety stock level", "base_score": 0.65}
"#;
