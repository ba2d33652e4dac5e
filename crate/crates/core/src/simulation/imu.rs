//! Synthetic 10-channel IMU sequences for four worker activities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use super::SimulationError;
use crate::types::{ImuWindow, Provenance, Sample, SampleKind, IMU_CHANNELS, IMU_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Idle,
    Walk,
    Assemble,
    Carry,
}

impl Activity {
    pub const ALL: [Activity; 4] = [
        Activity::Idle,
        Activity::Walk,
        Activity::Assemble,
        Activity::Carry,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Idle => "idle",
            Activity::Walk => "walk",
            Activity::Assemble => "assemble",
            Activity::Carry => "carry",
        }
    }

    pub fn index(self) -> usize {
        Activity::ALL.iter().position(|&a| a == self).unwrap_or(0)
    }
}

impl std::str::FromStr for Activity {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| SimulationError::InvalidParams(format!("unknown activity {s:?}")))
    }
}

/// Standard deviation of the sensor noise on every channel while idle.
pub const IDLE_NOISE: f64 = 0.02;
const ACTIVE_NOISE: f64 = 0.08;

/// Resting level per channel: gravity on z, a fixed magnetic field, and a
/// nominal capacitance.
const BASE: [f64; IMU_CHANNELS] = [0.0, 0.0, 9.81, 0.0, 0.0, 0.0, 22.0, -4.0, 41.0, 1.0];

/// `(channel, amplitude, frequency multiplier)` components of a template.
struct Template {
    step_hz: f64,
    offsets: [f64; IMU_CHANNELS],
    components: &'static [(usize, f64, f64)],
    /// Slow capacitance drift amplitude and burst size.
    drift: f64,
    burst: f64,
}

fn template(activity: Activity) -> Template {
    match activity {
        Activity::Idle => Template {
            step_hz: 0.0,
            offsets: [0.0; IMU_CHANNELS],
            components: &[],
            drift: 0.0,
            burst: 0.0,
        },
        Activity::Walk => Template {
            step_hz: 1.9,
            offsets: [0.0; IMU_CHANNELS],
            components: &[
                (2, 2.5, 1.0),
                (0, 1.2, 0.5),
                (1, 0.6, 0.5),
                (4, 1.0, 0.5),
                (5, 0.4, 0.5),
                (6, 3.0, 0.5),
                (7, 2.0, 0.5),
            ],
            drift: 0.1,
            burst: 0.1,
        },
        Activity::Assemble => Template {
            step_hz: 3.5,
            offsets: [0.3, 0.2, -0.4, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3],
            components: &[
                (0, 0.6, 1.0),
                (1, 0.6, 0.7),
                (3, 1.6, 1.0),
                (5, 1.4, 0.6),
                (8, 1.0, 0.3),
            ],
            drift: 0.1,
            burst: 0.8,
        },
        Activity::Carry => Template {
            step_hz: 1.5,
            offsets: [1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.6],
            components: &[(2, 1.8, 1.0), (0, 0.5, 0.5), (4, 0.3, 0.5), (6, 1.5, 0.5)],
            drift: 0.15,
            burst: 0.2,
        },
    }
}

/// Renders `duration_s` seconds of `activity`. Identical seeds give
/// identical sequences.
pub fn generate_imu_sequence(
    activity: Activity,
    duration_s: f64,
    seed: u64,
) -> Result<ImuWindow, SimulationError> {
    if !(duration_s >= 2.0) {
        return Err(SimulationError::InvalidParams(format!(
            "duration {duration_s} s is below 2 s"
        )));
    }
    let n = (duration_s * IMU_RATE_HZ as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = template(activity);
    let step_hz = t.step_hz * rng.random_range(0.95..1.05);
    let noise_sd = if activity == Activity::Idle {
        IDLE_NOISE
    } else {
        ACTIVE_NOISE
    };
    let noise =
        Normal::new(0.0, noise_sd).map_err(|e| SimulationError::InvalidParams(e.to_string()))?;
    let mut channels: Vec<Vec<f64>> = (0..IMU_CHANNELS)
        .map(|c| vec![BASE[c] + t.offsets[c]; n])
        .collect();

    for &(c, amp, mult) in t.components {
        let amp = amp * rng.random_range(0.85..1.15);
        let phase = rng.random_range(0.0..TAU);
        for (i, v) in channels[c].iter_mut().enumerate() {
            let time = i as f64 / IMU_RATE_HZ as f64;
            *v += amp * (TAU * step_hz * mult * time + phase).sin();
        }
    }
    if t.drift > 0.0 || t.burst > 0.0 {
        let phase = rng.random_range(0.0..TAU);
        let mut burst_level = 0.0;
        let cap = &mut channels[IMU_CHANNELS - 1];
        for (i, v) in cap.iter_mut().enumerate() {
            let time = i as f64 / IMU_RATE_HZ as f64;
            if rng.random::<f64>() < 0.05 {
                burst_level += t.burst;
            }
            burst_level *= 0.8;
            *v += t.drift * (TAU * 0.05 * time + phase).sin() + burst_level;
        }
    }
    for c in channels.iter_mut() {
        c.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    ImuWindow::new(channels).map_err(|e| SimulationError::InvalidParams(e.to_string()))
}

/// The sequence as a synthetic sample with frame-major raw features.
pub fn imu_sample(
    id: &str,
    activity: Activity,
    window: &ImuWindow,
) -> Result<Sample, SimulationError> {
    let flat: Vec<f64> = window.frames().into_iter().flatten().collect();
    Sample::new(id, SampleKind::ImuWindow, flat, Provenance::Synthetic)
        .and_then(|s| s.with_label(activity.as_str()))
        .map_err(|e| SimulationError::InvalidParams(e.to_string()))
}
