//! Keeps the defect ratio of a manual-revision stream high enough to hold an
//! annotator's attention by injecting known defects.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use super::SimulationError;
use crate::types::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalancerConfig {
    /// Target presented defect ratio r*.
    pub target_ratio: f64,
    /// Number of most recently emitted items the ratio is measured over.
    pub window: usize,
    /// Reserve sources in the order they are drawn from.
    pub source_priority: Vec<Provenance>,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        Self {
            target_ratio: 0.3,
            window: 50,
            source_priority: vec![Provenance::Synthetic, Provenance::InjectedKnownDefect],
        }
    }
}

impl BalancerConfig {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if !(self.target_ratio > 0.0 && self.target_ratio < 1.0) {
            return Err(SimulationError::InvalidParams(format!(
                "target ratio {} outside (0,1)",
                self.target_ratio
            )));
        }
        if self.window < 10 {
            return Err(SimulationError::InvalidParams(
                "window must be at least 10".into(),
            ));
        }
        if self.source_priority.iter().any(|p| p.is_real()) {
            return Err(SimulationError::InvalidParams(
                "real samples cannot be injected".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamItem {
    pub sample_id: String,
    pub defect: bool,
    pub provenance: Provenance,
}

/// Quality statistics over real items only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProductionStats {
    pub real_items: usize,
    pub real_defects: usize,
}

impl ProductionStats {
    pub fn defect_rate(&self) -> f64 {
        if self.real_items == 0 {
            0.0
        } else {
            self.real_defects as f64 / self.real_items as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceOutcome {
    /// The incoming item followed by any injected items.
    pub emitted: Vec<StreamItem>,
    /// Set when injection was needed but the reserve ran dry.
    pub warning: Option<String>,
}

/// Single-writer stream balancer.
#[derive(Debug, Clone)]
pub struct StreamBalancer {
    config: BalancerConfig,
    window: VecDeque<bool>,
    reserve: Vec<VecDeque<StreamItem>>,
    stats: ProductionStats,
    injected: usize,
}

impl StreamBalancer {
    pub fn new(config: BalancerConfig) -> Result<Self, SimulationError> {
        config.validate()?;
        let reserve = vec![VecDeque::new(); config.source_priority.len()];
        Ok(Self {
            window: VecDeque::with_capacity(config.window),
            config,
            reserve,
            stats: ProductionStats::default(),
            injected: 0,
        })
    }

    /// Adds an injectable item. Only non-real defects are accepted.
    pub fn add_reserve(&mut self, item: StreamItem) -> Result<(), SimulationError> {
        if !item.defect {
            return Err(SimulationError::InvalidParams(
                "reserve items must be defects".into(),
            ));
        }
        let slot = self
            .config
            .source_priority
            .iter()
            .position(|&p| p == item.provenance)
            .ok_or_else(|| {
                SimulationError::InvalidParams(format!(
                    "provenance {:?} not injectable",
                    item.provenance
                ))
            })?;
        self.reserve[slot].push_back(item);
        Ok(())
    }

    pub fn reserve_len(&self) -> usize {
        self.reserve.iter().map(VecDeque::len).sum()
    }

    pub fn window_ratio(&self) -> f64 {
        if self.window.is_empty() {
            return 0.0;
        }
        self.window.iter().filter(|&&d| d).count() as f64 / self.window.len() as f64
    }

    pub fn window_full(&self) -> bool {
        self.window.len() == self.config.window
    }

    pub fn production_stats(&self) -> ProductionStats {
        self.stats
    }

    pub fn injected_count(&self) -> usize {
        self.injected
    }

    fn present(&mut self, defect: bool) {
        if self.window.len() == self.config.window {
            self.window.pop_front();
        }
        self.window.push_back(defect);
    }

    fn next_reserve(&mut self) -> Option<StreamItem> {
        self.reserve.iter_mut().find_map(VecDeque::pop_front)
    }

    /// Emits the incoming item, then injects reserve items while the window
    /// ratio is below target.
    pub fn process(&mut self, incoming: StreamItem) -> BalanceOutcome {
        if incoming.provenance.is_real() {
            self.stats.real_items += 1;
            self.stats.real_defects += incoming.defect as usize;
        }
        self.present(incoming.defect);
        let mut emitted = vec![incoming];
        let mut warning = None;
        while self.window_ratio() < self.config.target_ratio {
            match self.next_reserve() {
                Some(item) => {
                    self.present(true);
                    self.injected += 1;
                    emitted.push(item);
                }
                None => {
                    tracing::warn!("balancer reserve empty; stream continues unbalanced");
                    warning = Some("reserve empty; stream continues unbalanced".into());
                    break;
                }
            }
        }
        BalanceOutcome { emitted, warning }
    }
}
