//! Literal reference implementations used as test oracles.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_core::forecasting::{Mlp, SpecParams};

/// SPEC by direct nested summation, recomputing every cumulative sum.
pub fn spec_literal(y: &[f64], f: &[f64], p: SpecParams) -> f64 {
    let n = y.len();
    let mut total = 0.0;
    for t in 1..=n {
        for i in 1..=t {
            let mut y_to_i = 0.0;
            for k in 1..=i {
                y_to_i += y[k - 1];
            }
            let mut f_to_i = 0.0;
            for k in 1..=i {
                f_to_i += f[k - 1];
            }
            let mut y_to_t = 0.0;
            for k in 1..=t {
                y_to_t += y[k - 1];
            }
            let mut f_to_t = 0.0;
            for k in 1..=t {
                f_to_t += f[k - 1];
            }
            let a = p.alpha1 * y[i - 1].min(y_to_i - f_to_t);
            let b = p.alpha2 * f[i - 1].min(f_to_i - y_to_t);
            let term = if a > b { a } else { b };
            let term = if term > 0.0 { term } else { 0.0 };
            total += term * (t - i + 1) as f64;
        }
    }
    total / n as f64
}

/// Mutual information from an explicit joint count table, in nats.
pub fn mi_from_table(table: &[Vec<usize>]) -> f64 {
    let n: usize = table.iter().flatten().sum();
    let rows = table.len();
    let cols = table[0].len();
    let mut mi = 0.0;
    for x in 0..rows {
        for y in 0..cols {
            let c = table[x][y];
            if c == 0 {
                continue;
            }
            let px: usize = table[x].iter().sum();
            let py: usize = (0..rows).map(|r| table[r][y]).sum();
            let pxy = c as f64 / n as f64;
            mi += pxy * (pxy / ((px as f64 / n as f64) * (py as f64 / n as f64))).ln();
        }
    }
    mi
}

/// Vote entropy by enumerating every class and counting votes one by one.
pub fn vote_entropy_enumerated(votes: &[usize], n_classes: usize) -> f64 {
    let mut h = 0.0;
    for class in 0..n_classes {
        let mut count = 0;
        for &v in votes {
            if v == class {
                count += 1;
            }
        }
        if count > 0 {
            let p = count as f64 / votes.len() as f64;
            h -= p * p.ln();
        }
    }
    h
}

/// Fraction of (positive, negative) pairs ranked correctly, ties as half.
pub fn auc_enumerated(scores: &[f64], positive: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if positive[i] && !positive[j] {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Worst relative error between analytic and central-difference gradients
/// of a randomly initialized net on random standardized rows.
#[allow(clippy::needless_range_loop)]
pub fn gradient_check(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = rng.random_range(2..6);
    let hidden = rng.random_range(2..8);
    let classes = rng.random_range(2..5);
    let rows_n = rng.random_range(3..10);
    let l2 = if rng.random::<bool>() { 0.0 } else { 1e-2 };
    let mut net = Mlp::init(input, hidden, classes, seed);
    let rows: Vec<Vec<f64>> = (0..rows_n)
        .map(|_| (0..input).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..rows_n).map(|_| rng.random_range(0..classes)).collect();
    let (_, analytic) = net.loss_and_gradient(&rows, &labels, l2);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..net.params().len() {
        let orig = net.params()[k];
        net.params_mut()[k] = orig + h;
        let (up, _) = net.loss_and_gradient(&rows, &labels, l2);
        net.params_mut()[k] = orig - h;
        let (down, _) = net.loss_and_gradient(&rows, &labels, l2);
        net.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let denom = analytic[k].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[k] - numeric).abs() / denom);
    }
    worst
}
