//! Mutual-information feature ranking over equal-width bins.

use serde::{Deserialize, Serialize};

use super::ForecastError;
use crate::exec::Exec;
use crate::types::LabeledSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub index: usize,
    pub mi: f64,
}

/// Bin index of each value over `bins` equal-width bins spanning the
/// observed range. A constant column lands entirely in bin 0.
pub fn equal_width_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    if !(width > 0.0) {
        return vec![0; values.len()];
    }
    values
        .iter()
        .map(|v| (((v - lo) / width * bins as f64) as usize).min(bins - 1))
        .collect()
}

/// `sum p(x,y) ln[p(x,y) / (p(x) p(y))]` in nats, with `0 ln 0 = 0`.
pub fn mutual_information(values: &[f64], labels: &[usize], n_classes: usize, bins: usize) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let xb = equal_width_bins(values, bins);
    let mut joint = vec![0usize; bins * n_classes];
    let mut px = vec![0usize; bins];
    let mut py = vec![0usize; n_classes];
    for (&x, &y) in xb.iter().zip(labels) {
        joint[x * n_classes + y] += 1;
        px[x] += 1;
        py[y] += 1;
    }
    let nf = n as f64;
    let mut mi = 0.0;
    for x in 0..bins {
        for y in 0..n_classes {
            let c = joint[x * n_classes + y];
            if c == 0 {
                continue;
            }
            let pxy = c as f64 / nf;
            mi += pxy * (pxy / ((px[x] as f64 / nf) * (py[y] as f64 / nf))).ln();
        }
    }
    mi.max(0.0)
}

/// Features sorted by descending MI; ties go to the lower index.
pub fn rank_features_mi(
    data: &LabeledSet,
    bins: usize,
) -> Result<Vec<FeatureScore>, ForecastError> {
    rank_features_mi_with(Exec::default(), data, bins)
}

pub fn rank_features_mi_with(
    exec: Exec,
    data: &LabeledSet,
    bins: usize,
) -> Result<Vec<FeatureScore>, ForecastError> {
    if bins < 2 {
        return Err(ForecastError::InvalidConfig(
            "MI ranking needs at least 2 bins".into(),
        ));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(ForecastError::DegenerateLabels(
            "MI ranking needs at least two classes".into(),
        ));
    }
    let mut scores = exec.map_range(data.dim(), |j| {
        let column: Vec<f64> = data.features.iter().map(|r| r[j]).collect();
        FeatureScore {
            index: j,
            mi: mutual_information(&column, &data.labels, data.n_classes(), bins),
        }
    });
    scores.sort_by(|a, b| b.mi.total_cmp(&a.mi).then(a.index.cmp(&b.index)));
    Ok(scores)
}
