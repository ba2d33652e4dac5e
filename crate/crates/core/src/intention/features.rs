//! Per-channel summary statistics of IMU windows.

use super::IntentionError;
use crate::types::{ImuWindow, IMU_CHANNELS, IMU_CHANNEL_NAMES, IMU_RATE_HZ};

/// Statistics computed per channel, in output order.
pub const STATS: [&str; 6] = ["mean", "std", "min", "max", "rms", "zcr"];
/// Length of every feature vector.
pub const IMU_FEATURE_DIM: usize = IMU_CHANNELS * STATS.len();
/// Shortest window that can be featurized (one second).
pub const MIN_WINDOW: usize = IMU_RATE_HZ;

/// `"{channel}_{stat}"`, channel-major.
pub fn imu_feature_names() -> Vec<String> {
    IMU_CHANNEL_NAMES
        .iter()
        .flat_map(|c| STATS.iter().map(move |s| format!("{c}_{s}")))
        .collect()
}

/// Fraction of the `n - 1` transitions where the mean-centered signal moves
/// between positive and non-positive. Values within a small tolerance of the
/// mean count as non-positive.
pub fn zero_crossing_rate(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let centered: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let tol = 1e-9 * centered.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let crossings = centered
        .windows(2)
        .filter(|w| (w[0] > tol) != (w[1] > tol))
        .count();
    crossings as f64 / (xs.len() - 1) as f64
}

fn channel_stats(xs: &[f64]) -> [f64; 6] {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rms = (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    [mean, std, min, max, rms, zero_crossing_rate(xs)]
}

/// Mean, standard deviation, min, max, RMS and zero-crossing rate for each
/// of the ten channels: 60 values in fixed order.
pub fn featurize(window: &ImuWindow) -> Result<Vec<f64>, IntentionError> {
    if window.len() < MIN_WINDOW {
        return Err(IntentionError::ShortWindow {
            needed: MIN_WINDOW,
            got: window.len(),
        });
    }
    Ok(window
        .channels()
        .iter()
        .flat_map(|c| channel_stats(c))
        .collect())
}

/// Start offsets of windows of `len` samples moved by `hop`.
pub fn window_starts(total: usize, len: usize, hop: usize) -> Vec<usize> {
    if total < len || hop == 0 {
        return Vec::new();
    }
    (0..=total - len).step_by(hop).collect()
}
