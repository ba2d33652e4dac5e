//! Reference-difference anomaly maps.

use super::{Explanation, ExplanationPayload, XaiError};
use crate::types::GrayImage;

/// Minimum number of good reference images.
pub const MIN_REFERENCES: usize = 10;

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    k.into_iter().map(|v| v / total).collect()
}

/// Separable Gaussian blur with clamped borders. `sigma <= 0` is a no-op.
pub fn gaussian_smooth(values: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return values.to_vec();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * values[y * w + clamp(x as i64 + j as i64 - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(j, kv)| kv * tmp[clamp(y as i64 + j as i64 - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// `|image - mean(references)|`, smoothed, keeping only pixels above
/// `mean + z * std` of the smoothed map. Kept pixels are scaled by the map
/// maximum, everything else is zero.
pub fn anomaly_map(
    image: &GrayImage,
    references: &[GrayImage],
    sigma: f64,
    z: f64,
    prediction_ref: &str,
) -> Result<Explanation, XaiError> {
    if references.len() < MIN_REFERENCES {
        return Err(XaiError::InvalidInput(format!(
            "need at least {MIN_REFERENCES} reference images, got {}",
            references.len()
        )));
    }
    if let Some(r) = references.iter().find(|r| !r.same_dims(image)) {
        return Err(XaiError::SizeMismatch(format!(
            "reference {}x{} vs image {}x{}",
            r.width(),
            r.height(),
            image.width(),
            image.height()
        )));
    }
    let (w, h) = (image.width(), image.height());
    let n = references.len() as f64;
    let diff: Vec<f64> = (0..w * h)
        .map(|i| {
            (image.pixels()[i] - references.iter().map(|r| r.pixels()[i]).sum::<f64>() / n).abs()
        })
        .collect();
    let smooth = gaussian_smooth(&diff, w, h, sigma);
    let mean = smooth.iter().sum::<f64>() / smooth.len() as f64;
    let std = (smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / smooth.len() as f64).sqrt();
    let threshold = mean + z * std;
    let max = smooth.iter().copied().fold(0.0, f64::max);
    let map: Vec<f64> = smooth
        .iter()
        .map(|&v| {
            if v > threshold && max > 0.0 {
                v / max
            } else {
                0.0
            }
        })
        .collect();
    let map =
        GrayImage::from_clamped(w, h, map).map_err(|e| XaiError::InvalidInput(e.to_string()))?;
    Ok(Explanation::new(
        format!("xano-{prediction_ref}"),
        prediction_ref,
        ExplanationPayload::AnomalyMap { map },
    ))
}
