//! One-hidden-layer feedforward classifier (ReLU hidden layer, softmax
//! output) trained by mini-batch gradient descent with momentum on
//! cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::types::LabeledSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop when the training loss has not improved by `plateau_tol` for
    /// this many epochs.
    pub plateau_patience: usize,
    pub plateau_tol: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            l2: 1e-4,
            batch_size: 32,
            max_epochs: 300,
            plateau_patience: 25,
            plateau_tol: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    input_dim: usize,
    hidden: usize,
    n_classes: usize,
    /// Flat parameters: w1 (hidden x input), b1, w2 (classes x hidden), b2.
    params: Vec<f64>,
    /// Per-feature standardization fitted on the training data.
    offset: Vec<f64>,
    scale: Vec<f64>,
    pub epochs_run: usize,
}

struct Activations {
    pre: Vec<f64>,
    hidden: Vec<f64>,
    probs: Vec<f64>,
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialization, deterministic per seed.
    pub fn init(input_dim: usize, hidden: usize, n_classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = hidden * input_dim + hidden + n_classes * hidden + n_classes;
        let mut params = vec![0.0; n];
        let b1 = 1.0 / (input_dim.max(1) as f64).sqrt();
        let b2 = 1.0 / (hidden.max(1) as f64).sqrt();
        let split = hidden * input_dim + hidden;
        for (i, p) in params.iter_mut().enumerate() {
            let bound = if i < split { b1 } else { b2 };
            *p = rng.random_range(-bound..=bound);
        }
        Self {
            input_dim,
            hidden,
            n_classes,
            params,
            offset: vec![0.0; input_dim],
            scale: vec![1.0; input_dim],
            epochs_run: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input_dim;
        let b1 = w1 + self.hidden;
        let w2 = b1 + self.n_classes * self.hidden;
        (w1, b1, w2)
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }

    fn forward(&self, z: &[f64]) -> Activations {
        let (w1_end, b1_end, w2_end) = self.offsets();
        let p = &self.params;
        let mut pre = p[w1_end..b1_end].to_vec();
        for (j, slot) in pre.iter_mut().enumerate() {
            let row = &p[j * self.input_dim..(j + 1) * self.input_dim];
            *slot += row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>();
        }
        let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let mut logits = p[w2_end..].to_vec();
        for (c, slot) in logits.iter_mut().enumerate() {
            let row = &p[b1_end + c * self.hidden..b1_end + (c + 1) * self.hidden];
            *slot += row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>();
        }
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|q| *q /= total);
        Activations { pre, hidden, probs }
    }

    /// Class probabilities for a raw (unstandardized) input row.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.forward(&self.standardize(x)).probs
    }

    /// Mean cross-entropy plus `0.5 * l2 * ||W||^2` over standardized rows,
    /// together with its gradient in the flat parameter layout.
    pub fn loss_and_gradient<R: AsRef<[f64]>>(
        &self,
        rows: &[R],
        labels: &[usize],
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let (w1_end, b1_end, w2_end) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let n = rows.len().max(1) as f64;
        for (z, &y) in rows.iter().zip(labels) {
            let z = z.as_ref();
            let act = self.forward(z);
            loss -= act.probs[y].max(1e-300).ln();
            let mut dlogit = act.probs.clone();
            dlogit[y] -= 1.0;
            dlogit.iter_mut().for_each(|d| *d /= n);
            let mut dh = vec![0.0; self.hidden];
            for (c, &d) in dlogit.iter().enumerate() {
                let base = b1_end + c * self.hidden;
                for j in 0..self.hidden {
                    grad[base + j] += d * act.hidden[j];
                    dh[j] += self.params[base + j] * d;
                }
                grad[w2_end + c] += d;
            }
            for j in 0..self.hidden {
                if act.pre[j] <= 0.0 {
                    continue;
                }
                let base = j * self.input_dim;
                for (i, x) in z.iter().enumerate() {
                    grad[base + i] += dh[j] * x;
                }
                grad[w1_end + j] += dh[j];
            }
        }
        loss /= n;
        if l2 > 0.0 {
            for i in (0..w1_end).chain(b1_end..w2_end) {
                loss += 0.5 * l2 * self.params[i] * self.params[i];
                grad[i] += l2 * self.params[i];
            }
        }
        (loss, grad)
    }

    /// Trains from scratch on `data`. The caller guarantees at least two
    /// classes and finite features.
    pub fn fit(data: &LabeledSet, config: &MlpConfig) -> Self {
        let dim = data.dim();
        let mut model = Mlp::init(dim, config.hidden, data.n_classes(), config.seed);
        model.fit_standardization(&data.features);
        let rows: Vec<Vec<f64>> = data.features.iter().map(|x| model.standardize(x)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9E37_79B9_7F4A_7C15);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut velocity = vec![0.0; model.params.len()];
        let batch = config.batch_size.max(1);
        let mut best = f64::INFINITY;
        let mut stale = 0;
        for epoch in 0..config.max_epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(batch) {
                let batch_rows: Vec<&[f64]> = chunk.iter().map(|&i| rows[i].as_slice()).collect();
                let batch_labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
                let (loss, grad) = model.loss_and_gradient(&batch_rows, &batch_labels, config.l2);
                epoch_loss += loss * chunk.len() as f64;
                for ((p, v), g) in model.params.iter_mut().zip(&mut velocity).zip(&grad) {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *p += *v;
                }
            }
            epoch_loss /= rows.len().max(1) as f64;
            model.epochs_run = epoch + 1;
            if epoch_loss < best - config.plateau_tol {
                best = epoch_loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.plateau_patience {
                    break;
                }
            }
        }
        model
    }

    fn fit_standardization(&mut self, rows: &[Vec<f64>]) {
        let n = rows.len().max(1) as f64;
        for i in 0..self.input_dim {
            let mean = rows.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / n;
            self.offset[i] = mean;
            self.scale[i] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}
