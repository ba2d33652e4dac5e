//! Service configuration: one TOML section per module, every field
//! optional.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use workbench_core::active_learning::StrategyName;
use workbench_core::forecasting::MlpConfig;
use workbench_core::intention::{default_speed_table, Point, SpeedTable, DEFAULT_BUFFER_M};
use workbench_core::simulation::DemandProfile;

use crate::error::ConfigError;

/// Environment variable that overrides the config path.
pub const CONFIG_ENV: &str = "WORKBENCH_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub server: ServerConfig,
    pub storage: StorageConfig,
    pub active_learning: ActiveLearningConfig,
    pub quality: QualityConfig,
    pub forecasting: ForecastingConfig,
    pub decision: DecisionConfig,
    pub intention: IntentionConfig,
    pub security: SecurityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    /// Largest accepted request body in bytes.
    pub max_body_bytes: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            max_body_bytes: 64 * 1024 * 1024,
        }
    }
}

/// Without a data directory everything lives in memory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StorageConfig {
    pub data_dir: Option<PathBuf>,
    /// Skip `fsync` on event appends.
    pub no_sync: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActiveLearningConfig {
    pub strategy: StrategyName,
    /// Tasks enqueued per round.
    pub batch: usize,
    pub lease_ttl_ms: i64,
    pub seed: u64,
}

impl Default for ActiveLearningConfig {
    fn default() -> Self {
        Self {
            strategy: StrategyName::Entropy,
            batch: 10,
            lease_ttl_ms: 300_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QualityConfig {
    pub classes: Vec<String>,
    /// Class treated as the negative class for AUC and defect rates.
    pub good_class: String,
    pub mlp: MlpConfig,
}

impl Default for QualityConfig {
    fn default() -> Self {
        Self {
            classes: ["good", "double_print", "interrupted_print"]
                .map(String::from)
                .to_vec(),
            good_class: "good".into(),
            mlp: MlpConfig {
                hidden: 16,
                l2: 1e-3,
                max_epochs: 120,
                plateau_patience: 15,
                plateau_tol: 1e-4,
                ..MlpConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastingConfig {
    /// JSON-lines demand file; synthetic products are generated otherwise.
    pub demand_file: Option<PathBuf>,
    pub synthetic_products: usize,
    pub synthetic_profile: DemandProfile,
    pub seed: u64,
    /// Default method: croston, sba or twofold.
    pub method: String,
    pub alpha: f64,
}

impl Default for ForecastingConfig {
    fn default() -> Self {
        Self {
            demand_file: None,
            synthetic_products: 5,
            synthetic_profile: DemandProfile::default(),
            seed: 7,
            method: "sba".into(),
            alpha: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionConfig {
    /// JSON-lines rule file; the built-in rules are used otherwise.
    pub rules_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntentionConfig {
    pub buffer_m: f64,
    /// Robot corridor polygon in meters.
    pub corridor: Vec<Point>,
    pub speeds: SpeedTable,
    /// Synthetic sequences per activity used to train the classifier.
    pub train_per_class: usize,
    pub seed: u64,
}

impl Default for IntentionConfig {
    fn default() -> Self {
        Self {
            buffer_m: DEFAULT_BUFFER_M,
            corridor: vec![(0.0, -1.0), (20.0, -1.0), (20.0, 1.0), (0.0, 1.0)],
            speeds: default_speed_table(),
            train_per_class: 6,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityConfig {
    /// Policy file; the built-in policies are used otherwise.
    pub policies_file: Option<PathBuf>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    /// Explicit path first, then `WORKBENCH_CONFIG`, then defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, ConfigError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) => Self::load(Path::new(&p)),
                None => Ok(Self::default()),
            },
        }
    }
}
