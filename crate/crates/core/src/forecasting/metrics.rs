//! Classification metrics.

use serde::{Deserialize, Serialize};

use crate::types::argmax;

/// Mann-Whitney AUC by explicit pair counting; ties count one half.
/// `None` when either class is absent.
pub fn auc_pair_count(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() as f64 * neg.len() as f64))
}

/// AUC as the trapezoidal area under the ROC curve, with tied scores
/// grouped into a single ROC step.
pub fn auc_trapezoid(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count() as f64;
    let n_neg = positive.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0.0, 0.0);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        let (tpr, fpr) = (tp / n_pos, fp / n_neg);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

/// Mean over samples of `0.5 * sum_k (p_k - y_k)^2`. For two classes this is
/// the usual `(p_1 - y)^2`.
pub fn brier_score(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &y)| {
            p.iter()
                .enumerate()
                .map(|(k, &pk)| {
                    let t = if k == y { 1.0 } else { 0.0 };
                    (pk - t).powi(2)
                })
                .sum::<f64>()
                / 2.0
        })
        .sum();
    total / probs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub auc_roc: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub brier: f64,
}

impl Metrics {
    pub fn mean(all: &[Metrics]) -> Metrics {
        let n = all.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Metrics {
            auc_roc: sum(|m| m.auc_roc),
            accuracy: sum(|m| m.accuracy),
            precision: sum(|m| m.precision),
            recall: sum(|m| m.recall),
            f1: sum(|m| m.f1),
            brier: sum(|m| m.brier),
        }
    }
}

/// Precision, recall and F1 of class `class` under argmax decisions.
pub fn class_prf(probs: &[Vec<f64>], labels: &[usize], class: usize) -> (f64, f64, f64) {
    let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
    for (p, &y) in probs.iter().zip(labels) {
        let pred = argmax(p);
        match (pred == class, y == class) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, true) => fneg += 1.0,
            _ => {}
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fneg > 0.0 {
        tp / (tp + fneg)
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    (precision, recall, f1)
}

/// Scores a set of probability rows. Binary problems report the positive
/// class (index 1); multi-class problems report one-vs-rest macro averages.
pub fn score_predictions(probs: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Metrics {
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| argmax(p) == y)
        .count();
    let accuracy = correct as f64 / probs.len().max(1) as f64;
    let brier = brier_score(probs, labels);
    let one_vs_rest = |c: usize| -> Option<f64> {
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        auc_pair_count(&scores, &pos)
    };
    if n_classes == 2 {
        let (precision, recall, f1) = class_prf(probs, labels, 1);
        return Metrics {
            auc_roc: one_vs_rest(1).unwrap_or(0.5),
            accuracy,
            precision,
            recall,
            f1,
            brier,
        };
    }
    let aucs: Vec<f64> = (0..n_classes).filter_map(one_vs_rest).collect();
    let prf: Vec<(f64, f64, f64)> = (0..n_classes)
        .map(|c| class_prf(probs, labels, c))
        .collect();
    let k = n_classes.max(1) as f64;
    Metrics {
        auc_roc: if aucs.is_empty() {
            0.5
        } else {
            aucs.iter().sum::<f64>() / aucs.len() as f64
        },
        accuracy,
        precision: prf.iter().map(|x| x.0).sum::<f64>() / k,
        recall: prf.iter().map(|x| x.1).sum::<f64>() / k,
        f1: prf.iter().map(|x| x.2).sum::<f64>() / k,
        brier,
    }
}
