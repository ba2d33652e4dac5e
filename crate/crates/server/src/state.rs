//! Shared service state and the operations handlers run against it.

use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::BufReader;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use workbench_core::active_learning::{AnnotationQueue, LabelRecord, SystemClock};
use workbench_core::bus::{DocumentStore, EventBus, FileLog, DEFAULT_TOPICS};
use workbench_core::decision::{KnowledgeBase, Recommender, SEED_RULES};
use workbench_core::forecasting::{read_demand_jsonl, BatchConfig, DemandSeries, MlpConfig};
use workbench_core::intention::{imu_corpus, ActivityClassifier, IntentDecision};
use workbench_core::security::{AuditLog, PolicyManager, PolicySet, DEFAULT_POLICIES};
use workbench_core::simulation::{generate_demand, BalancerConfig, StreamBalancer};
use workbench_core::types::now_ms;
use workbench_core::Exec;

use crate::config::Config;
use crate::error::{ApiError, StartupError};
use crate::quality::{Quality, StoredSample};

/// Store key holding a policy set installed through the API.
pub const POLICY_KEY: &str = "policies/current";
pub const SAMPLE_PREFIX: &str = "samples/";

/// Actor recorded on events the service emits on its own behalf.
pub const SYSTEM_ACTOR: &str = "system";

/// What one active-learning round did.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RoundOutcome {
    pub retrained: Option<u64>,
    pub enqueued: usize,
}

pub struct AppState {
    pub config: Config,
    pub exec: Exec,
    pub bus: Arc<EventBus>,
    pub store: Arc<DocumentStore>,
    pub queue: AnnotationQueue,
    pub policies: PolicyManager,
    pub audit: AuditLog,
    pub recommender: Recommender,
    pub knowledge: KnowledgeBase,
    quality: Mutex<Quality>,
    pub demand: RwLock<BTreeMap<String, DemandSeries>>,
    pub intent: ActivityClassifier,
    pub last_intent: Mutex<Option<IntentDecision>>,
    pub balancer: Mutex<StreamBalancer>,
    ids: AtomicU64,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn read_file(path: &std::path::Path) -> Result<String, StartupError> {
    std::fs::read_to_string(path)
        .map_err(|e| StartupError::Storage(format!("{}: {e}", path.display())))
}

impl AppState {
    pub fn build(config: Config) -> Result<Arc<Self>, StartupError> {
        let (bus, store, audit) = match &config.storage.data_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)
                    .map_err(|e| StartupError::Storage(format!("{}: {e}", dir.display())))?;
                let mut log = FileLog::open(dir.join("events.log"))?;
                if config.storage.no_sync {
                    log = log.without_sync();
                }
                let bus = EventBus::with_log(&DEFAULT_TOPICS, Box::new(log))?;
                let store = DocumentStore::open(dir.join("store.jsonl"))
                    .map_err(|e| StartupError::Storage(e.to_string()))?;
                (bus, store, AuditLog::open(dir.join("audit.log"))?)
            }
            None => (
                EventBus::in_memory(),
                DocumentStore::in_memory(),
                AuditLog::in_memory(),
            ),
        };
        let store = Arc::new(store);

        let policy_text = match store.get(POLICY_KEY) {
            Ok(doc) => doc["text"].as_str().unwrap_or_default().to_string(),
            Err(_) => match &config.security.policies_file {
                Some(p) => read_file(p)?,
                None => DEFAULT_POLICIES.to_string(),
            },
        };
        let policies = PolicyManager::new(PolicySet::parse(&policy_text)?);

        let rules = match &config.decision.rules_file {
            Some(p) => read_file(p)?,
            None => SEED_RULES.to_string(),
        };
        let recommender = Recommender::from_rules(&rules)?;
        let knowledge = KnowledgeBase::with_store(store.clone())?;

        let f = &config.forecasting;
        let series = match &f.demand_file {
            Some(p) => {
                let file = std::fs::File::open(p)
                    .map_err(|e| StartupError::Storage(format!("{}: {e}", p.display())))?;
                read_demand_jsonl(BufReader::new(file))?
            }
            None => (0..f.synthetic_products)
                .map(|i| {
                    generate_demand(
                        &format!("P{:03}", i + 1),
                        &f.synthetic_profile,
                        f.seed.wrapping_add(i as u64),
                    )
                })
                .collect::<Result<_, _>>()?,
        };
        let demand = series
            .into_iter()
            .map(|s| (s.product_id.clone(), s))
            .collect();

        let i = &config.intention;
        let corpus = imu_corpus(i.train_per_class, 10.0, i.seed)?;
        let intent = ActivityClassifier::train(
            &corpus,
            &BatchConfig {
                mlp: MlpConfig {
                    hidden: 16,
                    max_epochs: 200,
                    seed: i.seed,
                    ..MlpConfig::default()
                },
                ..BatchConfig::default()
            },
        )?;

        let mut quality = Quality::new(config.quality.clone(), config.active_learning.clone());
        let mut stored: Vec<StoredSample> = store
            .keys_with_prefix(SAMPLE_PREFIX)
            .iter()
            .filter_map(|k| store.get_as(k).ok())
            .collect();
        stored.sort_by(|a, b| {
            a.sample
                .created_at
                .cmp(&b.sample.created_at)
                .then(a.sample.id.cmp(&b.sample.id))
        });
        for s in stored {
            quality.insert(s);
        }

        let queue =
            AnnotationQueue::new(Arc::new(SystemClock), config.active_learning.lease_ttl_ms);
        let balancer = StreamBalancer::new(BalancerConfig::default())?;
        tracing::info!(
            samples = quality.counts().total,
            products = config.forecasting.synthetic_products,
            persistent = config.storage.data_dir.is_some(),
            "state ready"
        );
        Ok(Arc::new(Self {
            exec: Exec::default(),
            bus: Arc::new(bus),
            store,
            queue,
            policies,
            audit,
            recommender,
            knowledge,
            quality: Mutex::new(quality),
            demand: RwLock::new(demand),
            intent,
            last_intent: Mutex::new(None),
            balancer: Mutex::new(balancer),
            ids: AtomicU64::new(0),
            config,
        }))
    }

    /// A fresh id that stays unique across restarts.
    pub fn next_id(&self, prefix: &str) -> String {
        let n = self.ids.fetch_add(1, Ordering::Relaxed) + 1;
        format!("{prefix}-{}-{n}", now_ms())
    }

    pub fn quality(&self) -> MutexGuard<'_, Quality> {
        lock(&self.quality)
    }

    pub fn publish(&self, topic: &str, payload: Value, actor: &str) -> Result<(), ApiError> {
        self.bus.publish(topic, payload, actor)?;
        Ok(())
    }

    pub fn persist_sample(&self, s: &StoredSample) -> Result<(), ApiError> {
        self.store
            .put_as(&format!("{SAMPLE_PREFIX}{}", s.sample.id), s)
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Applies an answered task to the sample and persists both.
    pub fn record_label(&self, record: &LabelRecord) -> Result<(), ApiError> {
        let updated = self.quality().set_label(&record.sample_id, &record.label)?;
        self.persist_sample(&updated)?;
        self.store
            .put_as(&format!("labels/{}", self.next_id("label")), record)
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Retrains on new labels and refills the queue, but only once every
    /// task of the previous round is answered.
    pub fn advance_round(&self) -> Result<RoundOutcome, ApiError> {
        let mut quality = self.quality();
        let counts = self.queue.counts();
        if counts.queued + counts.leased + counts.expired > 0 {
            return Ok(RoundOutcome::default());
        }
        let mut outcome = RoundOutcome::default();
        if let Some(info) = quality.retrain()? {
            outcome.retrained = Some(info.version);
            self.publish(
                "predictions",
                json!({ "type": "model_updated", "version": info.version, "trained_on": info.trained_on, "model_id": info.model_id }),
                SYSTEM_ACTOR,
            )?;
        }
        let strategy = self.config.active_learning.strategy.as_str();
        for pick in quality.select_batch(self.exec)? {
            let task = self
                .queue
                .enqueue(&pick.sample_id, strategy, pick.score, pick.hints);
            self.publish(
                "queries",
                json!({ "type": "enqueued", "task": task }),
                SYSTEM_ACTOR,
            )?;
            outcome.enqueued += 1;
        }
        if outcome.retrained.is_some() || outcome.enqueued > 0 {
            tracing::debug!(?outcome, "round advanced");
        }
        Ok(outcome)
    }
}
