//! Interpolation oversampling of a minority class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimulationError;
use crate::types::{LabeledSet, Provenance, Sample, SampleKind};

/// One synthetic point and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPoint {
    pub features: Vec<f64>,
    pub label: usize,
    /// Row indices of the two parents in the source set.
    pub parents: (usize, usize),
    /// Interpolation weight toward the second parent.
    pub u: f64,
}

/// `x + u (x' - x)`.
pub fn interpolate(x: &[f64], neighbor: &[f64], u: f64) -> Vec<f64> {
    x.iter()
        .zip(neighbor)
        .map(|(a, b)| a + u * (b - a))
        .collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Synthetic points for class `minority` until it makes up `target_share`
/// of the pair (minority, largest other class). Other classes never change.
pub fn oversample_minority(
    data: &LabeledSet,
    minority: usize,
    target_share: f64,
    k: usize,
    seed: u64,
) -> Result<Vec<SyntheticPoint>, SimulationError> {
    if !(target_share > 0.0 && target_share < 1.0) {
        return Err(SimulationError::InvalidParams(format!(
            "target share {target_share} outside (0,1)"
        )));
    }
    if k == 0 {
        return Err(SimulationError::InvalidParams(
            "k must be at least 1".into(),
        ));
    }
    let counts = data.class_counts();
    let members: Vec<usize> = (0..data.len())
        .filter(|&i| data.labels[i] == minority)
        .collect();
    if members.len() < 2 {
        return Err(SimulationError::CannotInterpolate {
            class: minority,
            count: members.len(),
        });
    }
    let majority = counts
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != minority)
        .map(|(_, &n)| n)
        .max()
        .unwrap_or(0);
    // Smallest total m with m / (m + majority) >= share.
    let wanted = (target_share * majority as f64 / (1.0 - target_share) - 1e-9)
        .ceil()
        .max(0.0) as usize;
    let needed = wanted.saturating_sub(members.len());

    let neighbors: Vec<Vec<usize>> = members
        .iter()
        .map(|&i| {
            let mut others: Vec<usize> = members.iter().copied().filter(|&j| j != i).collect();
            others.sort_by(|&a, &b| {
                sq_dist(&data.features[i], &data.features[a])
                    .total_cmp(&sq_dist(&data.features[i], &data.features[b]))
                    .then(a.cmp(&b))
            });
            others.truncate(k);
            others
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(needed);
    for _ in 0..needed {
        let pick = rng.random_range(0..members.len());
        let nbrs = &neighbors[pick];
        let j = nbrs[rng.random_range(0..nbrs.len())];
        let u: f64 = rng.random();
        let i = members[pick];
        out.push(SyntheticPoint {
            features: interpolate(&data.features[i], &data.features[j], u),
            label: minority,
            parents: (i, j),
            u,
        });
    }
    Ok(out)
}

/// Appends synthetic points to a copy of `data`.
pub fn augmented(data: &LabeledSet, synthetic: &[SyntheticPoint]) -> LabeledSet {
    let mut out = data.clone();
    for p in synthetic {
        out.features.push(p.features.clone());
        out.labels.push(p.label);
    }
    out
}

/// Wraps synthetic points as samples with synthetic provenance.
pub fn to_samples(
    points: &[SyntheticPoint],
    classes: &[String],
    kind: SampleKind,
    id_prefix: &str,
) -> Vec<Sample> {
    points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            Sample::new(
                format!("{id_prefix}-{i}"),
                kind,
                p.features.clone(),
                Provenance::Synthetic,
            )
            .and_then(|s| s.with_label(classes[p.label].clone()))
            .ok()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imbalanced() -> LabeledSet {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let minority = i % 20 == 0;
            let x = i as f64 * 0.01;
            features.push(if minority {
                vec![5.0 + x, 5.0 - x]
            } else {
                vec![x, -x]
            });
            labels.push(minority as usize);
        }
        LabeledSet::new(features, labels, vec!["good".into(), "defect".into()]).unwrap()
    }

    #[test]
    fn midpoint() {
        assert_eq!(interpolate(&[0.0, 0.0], &[2.0, 2.0], 0.5), vec![1.0, 1.0]);
    }

    #[test]
    fn balance_count_and_segment_property() {
        let data = imbalanced();
        assert_eq!(data.class_counts(), vec![190, 10]);
        let synth = oversample_minority(&data, 1, 0.5, 5, 42).unwrap();
        assert_eq!(synth.len(), 180);
        assert!(synth
            .iter()
            .all(|p| p.label == 1 && (0.0..1.0).contains(&p.u)));
        for p in &synth {
            let (a, b) = (&data.features[p.parents.0], &data.features[p.parents.1]);
            for d in 0..2 {
                let (lo, hi) = (a[d].min(b[d]), a[d].max(b[d]));
                assert!(p.features[d] >= lo - 1e-12 && p.features[d] <= hi + 1e-12);
            }
        }
        let aug = augmented(&data, &synth);
        assert_eq!(aug.class_counts(), vec![190, 190]);
    }

    #[test]
    fn single_minority_cannot_interpolate() {
        let data = LabeledSet::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            vec![0, 0, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        assert!(matches!(
            oversample_minority(&data, 1, 0.5, 5, 0),
            Err(SimulationError::CannotInterpolate { .. })
        ));
    }

    #[test]
    fn samples_are_synthetic() {
        let data = imbalanced();
        let synth = oversample_minority(&data, 1, 0.2, 3, 1).unwrap();
        let samples = to_samples(&synth, &data.classes, SampleKind::Tabular, "os");
        assert_eq!(samples.len(), synth.len());
        assert!(samples
            .iter()
            .all(|s| s.provenance() == Provenance::Synthetic && s.label() == Some("defect")));
    }
}
