//! Shallow decision-tree surrogates of black-box classifiers.

use serde::{Deserialize, Serialize};

use super::{
    Explanation, ExplanationPayload, RankedFeature, XaiError, WARN_DEGENERATE, WARN_LOW_FIDELITY,
};
use crate::exec::Exec;
use crate::forecasting::ProbaModel;
use crate::types::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub max_depth: usize,
    pub min_background: usize,
    /// Agreement with the model below this sets the low-fidelity warning.
    pub min_fidelity: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_background: 50,
            min_fidelity: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// CART classification tree grown with Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    /// Total weighted impurity decrease per feature, normalized to sum 1
    /// (all zero when the tree never split).
    pub importances: Vec<f64>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.0 - counts
        .iter()
        .map(|&c| (c as f64 / n as f64).powi(2))
        .sum::<f64>()
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn best_split_for_feature(
    rows: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
    feature: usize,
    n_classes: usize,
    parent_gini: f64,
) -> Option<BestSplit> {
    let mut order: Vec<usize> = idx.to_vec();
    order.sort_by(|&a, &b| rows[a][feature].total_cmp(&rows[b][feature]));
    let n = order.len();
    let mut total = vec![0usize; n_classes];
    order.iter().for_each(|&i| total[labels[i]] += 1);
    let mut left = vec![0usize; n_classes];
    let mut best: Option<BestSplit> = None;
    for pos in 0..n - 1 {
        left[labels[order[pos]]] += 1;
        let (v, next) = (rows[order[pos]][feature], rows[order[pos + 1]][feature]);
        if next <= v {
            continue;
        }
        let nl = pos + 1;
        let right: Vec<usize> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
        let weighted =
            (nl as f64 * gini(&left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64;
        let decrease = parent_gini - weighted;
        if best.as_ref().is_none_or(|b| decrease > b.decrease + 1e-15) {
            best = Some(BestSplit {
                feature,
                threshold: 0.5 * (v + next),
                decrease,
            });
        }
    }
    best
}

impl DecisionTree {
    pub fn fit(
        rows: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
        max_depth: usize,
        exec: Exec,
    ) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let mut raw = vec![0.0; dim];
        let idx: Vec<usize> = (0..rows.len()).collect();
        let root = Self::grow(
            rows,
            labels,
            &idx,
            n_classes,
            max_depth,
            rows.len(),
            &mut raw,
            exec,
        );
        let total: f64 = raw.iter().sum();
        let importances = if total > 0.0 {
            raw.iter().map(|v| v / total).collect()
        } else {
            vec![0.0; dim]
        };
        Self { root, importances }
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        rows: &[Vec<f64>],
        labels: &[usize],
        idx: &[usize],
        n_classes: usize,
        depth_left: usize,
        n_total: usize,
        importance: &mut [f64],
        exec: Exec,
    ) -> Node {
        let mut counts = vec![0usize; n_classes];
        idx.iter().for_each(|&i| counts[labels[i]] += 1);
        let majority = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(c, _)| c);
        let parent = gini(&counts, idx.len());
        if depth_left == 0 || parent <= 0.0 || idx.len() < 2 {
            return Node::Leaf { class: majority };
        }
        let dim = importance.len();
        let candidates: Vec<Option<BestSplit>> = exec.map_range(dim, |f| {
            best_split_for_feature(rows, labels, idx, f, n_classes, parent)
        });
        // Lowest feature index wins ties.
        let mut best: Option<BestSplit> = None;
        for c in candidates.into_iter().flatten() {
            if best
                .as_ref()
                .is_none_or(|b| c.decrease > b.decrease + 1e-15)
            {
                best = Some(c);
            }
        }
        let Some(split) = best.filter(|b| b.decrease > 1e-12) else {
            return Node::Leaf { class: majority };
        };
        importance[split.feature] += split.decrease * idx.len() as f64 / n_total as f64;
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| rows[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(Self::grow(
                rows,
                labels,
                &l,
                n_classes,
                depth_left - 1,
                n_total,
                importance,
                exec,
            )),
            right: Box::new(Self::grow(
                rows,
                labels,
                &r,
                n_classes,
                depth_left - 1,
                n_total,
                importance,
                exec,
            )),
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.root, Node::Leaf { .. })
    }
}

/// Fits a tree to the model's argmax on `background` and ranks features by
/// the tree's impurity decrease.
pub fn explain_surrogate(
    model: &dyn ProbaModel,
    background: &[Vec<f64>],
    feature_names: &[String],
    prediction_ref: &str,
    config: &SurrogateConfig,
    exec: Exec,
) -> Result<Explanation, XaiError> {
    if background.len() < config.min_background {
        return Err(XaiError::InvalidInput(format!(
            "background has {} samples, need at least {}",
            background.len(),
            config.min_background
        )));
    }
    let dim = background[0].len();
    if feature_names.len() != dim || background.iter().any(|r| r.len() != dim) {
        return Err(XaiError::InvalidInput(
            "feature names and background rows must share one dimension".into(),
        ));
    }
    let targets: Vec<usize> = exec
        .map(background, |x| model.predict_proba(x).map(|p| argmax(&p)))
        .into_iter()
        .collect::<Result<_, _>>()?;
    let tree = DecisionTree::fit(
        background,
        &targets,
        model.n_classes(),
        config.max_depth,
        exec,
    );
    let agree = background
        .iter()
        .zip(&targets)
        .filter(|(x, &t)| tree.predict(x) == t)
        .count();
    let fidelity = agree as f64 / background.len() as f64;

    let mut features: Vec<RankedFeature> = feature_names
        .iter()
        .zip(&tree.importances)
        .map(|(f, &importance)| RankedFeature {
            feature: f.clone(),
            importance,
        })
        .collect();
    // Stable sort keeps the lower index first on ties.
    features.sort_by(|a, b| b.importance.total_cmp(&a.importance));
    let mut e = Explanation::new(
        format!("xfr-{prediction_ref}"),
        prediction_ref,
        ExplanationPayload::FeatureRanking { features, fidelity },
    );
    if tree.is_leaf() {
        e.warnings.push(WARN_DEGENERATE.into());
    }
    if fidelity < config.min_fidelity || tree.is_leaf() {
        e.warnings.push(WARN_LOW_FIDELITY.into());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn background(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    fn names(dim: usize) -> Vec<String> {
        (0..dim).map(|i| format!("f{i}")).collect()
    }

    fn ranking(e: &Explanation) -> Vec<RankedFeature> {
        match &e.payload {
            ExplanationPayload::FeatureRanking { features, .. } => features.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_informative_feature() {
        let m = (2usize, |x: &[f64]| {
            if x[0] > 0.5 {
                vec![0.1, 0.9]
            } else {
                vec![0.9, 0.1]
            }
        });
        let e = explain_surrogate(
            &m,
            &background(200, 4, 1),
            &names(4),
            "p",
            &SurrogateConfig::default(),
            Exec::Sequential,
        )
        .unwrap();
        let r = ranking(&e);
        assert_eq!(r[0].feature, "f0");
        assert!(r[0].importance > 0.9);
        assert!(e.warnings.is_empty());
    }

    #[test]
    fn constant_model_warns() {
        let m = (2usize, |_: &[f64]| vec![0.3, 0.7]);
        let e = explain_surrogate(
            &m,
            &background(60, 3, 2),
            &names(3),
            "p",
            &SurrogateConfig::default(),
            Exec::Sequential,
        )
        .unwrap();
        assert!(ranking(&e).iter().all(|f| f.importance == 0.0));
        assert!(e.has_warning(WARN_DEGENERATE));
    }

    #[test]
    fn duplicated_feature_shares_mass() {
        let m = (2usize, |x: &[f64]| {
            if x[0] > 0.4 {
                vec![0.0, 1.0]
            } else {
                vec![1.0, 0.0]
            }
        });
        let single = background(200, 3, 3);
        let dup: Vec<Vec<f64>> = single
            .iter()
            .map(|r| vec![r[0], r[0], r[1], r[2]])
            .collect();
        let e1 = explain_surrogate(
            &m,
            &single,
            &names(3),
            "p",
            &SurrogateConfig::default(),
            Exec::Sequential,
        )
        .unwrap();
        let m2 = (2usize, |x: &[f64]| {
            if x[0] > 0.4 {
                vec![0.0, 1.0]
            } else {
                vec![1.0, 0.0]
            }
        });
        let e2 = explain_surrogate(
            &m2,
            &dup,
            &names(4),
            "p",
            &SurrogateConfig::default(),
            Exec::Parallel,
        )
        .unwrap();
        let imp = |e: &Explanation, f: &str| {
            ranking(e)
                .iter()
                .find(|r| r.feature == f)
                .unwrap()
                .importance
        };
        assert!((imp(&e1, "f0") - (imp(&e2, "f0") + imp(&e2, "f1"))).abs() < 1e-9);
        for e in [&e1, &e2] {
            assert!((ranking(e).iter().map(|r| r.importance).sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn small_background_rejected() {
        let m = (2usize, |_: &[f64]| vec![0.5, 0.5]);
        assert!(explain_surrogate(
            &m,
            &background(10, 2, 0),
            &names(2),
            "p",
            &SurrogateConfig::default(),
            Exec::Sequential
        )
        .is_err());
    }
}
