//! Optional enrichment of explanations from an external knowledge source.
//! Failures never block the explanation; they add a warning instead.

use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use super::{Explanation, XaiError, WARN_ENRICHMENT};
use crate::types::Timestamp;

/// Default time allowed for an enrichment lookup.
pub const DEFAULT_ENRICHMENT_DEADLINE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentRequest {
    pub keywords: Vec<String>,
    /// Inclusive `(from, to)` timestamps.
    pub time_range: Option<(Timestamp, Timestamp)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentItem {
    pub title: String,
    pub source: String,
    pub ts: Timestamp,
    pub relevance: f64,
}

pub trait EnrichmentClient: Send + Sync {
    fn fetch(&self, request: &EnrichmentRequest) -> Result<Vec<EnrichmentItem>, XaiError>;
}

/// Serves items from a fixed list, matching any keyword in the title.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    items: Vec<EnrichmentItem>,
    delay: Option<Duration>,
}

impl FixtureClient {
    pub fn new(items: Vec<EnrichmentItem>) -> Self {
        Self { items, delay: None }
    }

    /// Loads a JSON array of items.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, XaiError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| XaiError::Enrichment(e.to_string()))?;
        let items = serde_json::from_str(&text).map_err(|e| XaiError::Enrichment(e.to_string()))?;
        Ok(Self::new(items))
    }

    /// Sleeps before answering, for exercising deadlines.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }
}

impl EnrichmentClient for FixtureClient {
    fn fetch(&self, request: &EnrichmentRequest) -> Result<Vec<EnrichmentItem>, XaiError> {
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        let keywords: Vec<String> = request.keywords.iter().map(|k| k.to_lowercase()).collect();
        Ok(self
            .items
            .iter()
            .filter(|it| {
                let title = it.title.to_lowercase();
                keywords.is_empty() || keywords.iter().any(|k| title.contains(k))
            })
            .filter(|it| {
                request
                    .time_range
                    .is_none_or(|(from, to)| it.ts >= from && it.ts <= to)
            })
            .cloned()
            .collect())
    }
}

/// Always fails; used when enrichment is switched off.
#[derive(Debug, Clone, Copy, Default)]
pub struct DisabledClient;

impl EnrichmentClient for DisabledClient {
    fn fetch(&self, _: &EnrichmentRequest) -> Result<Vec<EnrichmentItem>, XaiError> {
        Err(XaiError::Enrichment("enrichment is disabled".into()))
    }
}

/// Attaches enrichment items, most relevant first. On error or when the
/// deadline passes, the explanation is returned with a warning and no items.
pub fn enrich(
    mut explanation: Explanation,
    client: Arc<dyn EnrichmentClient>,
    request: EnrichmentRequest,
    deadline: Duration,
) -> Explanation {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(client.fetch(&request));
    });
    match rx.recv_timeout(deadline) {
        Ok(Ok(mut items)) => {
            items.sort_by(|a, b| b.relevance.total_cmp(&a.relevance));
            explanation.enrichment = items;
        }
        Ok(Err(e)) => {
            tracing::warn!(error = %e, "enrichment failed");
            explanation.warnings.push(WARN_ENRICHMENT.into());
        }
        Err(_) => {
            tracing::warn!(?deadline, "enrichment timed out");
            explanation.warnings.push(WARN_ENRICHMENT.into());
        }
    }
    explanation
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xai::ExplanationPayload;

    fn base() -> Explanation {
        Explanation::new(
            "e",
            "p",
            ExplanationPayload::NearestNeighbor {
                sample_ref: "s".into(),
                label: "good".into(),
                similarity: 0.9,
            },
        )
    }

    fn items() -> Vec<EnrichmentItem> {
        vec![
            EnrichmentItem {
                title: "Ink supplier delay".into(),
                source: "news".into(),
                ts: 10,
                relevance: 0.4,
            },
            EnrichmentItem {
                title: "Ink viscosity notice".into(),
                source: "vendor".into(),
                ts: 20,
                relevance: 0.9,
            },
            EnrichmentItem {
                title: "Holiday schedule".into(),
                source: "hr".into(),
                ts: 30,
                relevance: 1.0,
            },
        ]
    }

    fn request() -> EnrichmentRequest {
        EnrichmentRequest {
            keywords: vec!["ink".into()],
            time_range: None,
        }
    }

    #[test]
    fn sorted_by_relevance() {
        let e = enrich(
            base(),
            Arc::new(FixtureClient::new(items())),
            request(),
            DEFAULT_ENRICHMENT_DEADLINE,
        );
        let rel: Vec<f64> = e.enrichment.iter().map(|i| i.relevance).collect();
        assert_eq!(rel, vec![0.9, 0.4]);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn disabled_and_slow_sources_warn() {
        let e = enrich(
            base(),
            Arc::new(DisabledClient),
            request(),
            DEFAULT_ENRICHMENT_DEADLINE,
        );
        assert!(e.has_warning(WARN_ENRICHMENT) && e.enrichment.is_empty());
        let slow = FixtureClient::new(items()).with_delay(Duration::from_millis(300));
        let e = enrich(base(), Arc::new(slow), request(), Duration::from_millis(20));
        assert!(e.has_warning(WARN_ENRICHMENT) && e.enrichment.is_empty());
        assert_eq!(e.payload, base().payload);
    }

    #[test]
    fn time_range_filters() {
        let req = EnrichmentRequest {
            keywords: vec![],
            time_range: Some((15, 30)),
        };
        let e = enrich(
            base(),
            Arc::new(FixtureClient::new(items())),
            req,
            DEFAULT_ENRICHMENT_DEADLINE,
        );
        assert_eq!(e.enrichment.len(), 2);
    }
}
