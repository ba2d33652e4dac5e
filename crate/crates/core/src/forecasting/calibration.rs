//! Platt scaling: a sigmoid fitted by maximum likelihood on the logit of a
//! model's raw class score.

use serde::{Deserialize, Serialize};

use super::ForecastError;

const LOGIT_CLAMP: f64 = 1e-9;

fn logit(p: f64) -> f64 {
    let p = p.clamp(LOGIT_CLAMP, 1.0 - LOGIT_CLAMP);
    (p / (1.0 - p)).ln()
}

/// `P(y = 1 | s) = 1 / (1 + exp(a * logit(s) + b))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattScaler {
    pub a: f64,
    pub b: f64,
}

impl PlattScaler {
    /// Leaves scores unchanged.
    pub const IDENTITY: PlattScaler = PlattScaler { a: -1.0, b: 0.0 };

    pub fn apply(&self, score: f64) -> f64 {
        let z = self.a * logit(score) + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    /// Newton's method with backtracking on the regularized targets from
    /// Platt's original procedure.
    pub fn fit(scores: &[f64], positives: &[bool]) -> Result<Self, ForecastError> {
        let n_pos = positives.iter().filter(|&&p| p).count();
        let n_neg = positives.len() - n_pos;
        if n_pos == 0 || n_neg == 0 {
            return Err(ForecastError::DegenerateLabels(
                "calibration holdout has a single class".into(),
            ));
        }
        let hi = (n_pos as f64 + 1.0) / (n_pos as f64 + 2.0);
        let lo = 1.0 / (n_neg as f64 + 2.0);
        let f: Vec<f64> = scores.iter().map(|&s| logit(s)).collect();
        let t: Vec<f64> = positives.iter().map(|&p| if p { hi } else { lo }).collect();

        let objective = |a: f64, b: f64| -> f64 {
            f.iter()
                .zip(&t)
                .map(|(&fi, &ti)| {
                    let z = a * fi + b;
                    // -[t log p + (1-t) log(1-p)] with p = 1/(1+e^z)
                    if z >= 0.0 {
                        ti * z + (1.0 + (-z).exp()).ln()
                    } else {
                        (ti - 1.0) * z + (1.0 + z.exp()).ln()
                    }
                })
                .sum()
        };

        let prior = ((n_neg as f64 + 1.0) / (n_pos as f64 + 1.0)).ln();
        let (mut a, mut b) = (0.0, prior);
        let mut value = objective(a, b);
        for _ in 0..100 {
            let (mut ga, mut gb, mut h11, mut h22, mut h21) = (0.0, 0.0, 1e-12, 1e-12, 0.0);
            for (&fi, &ti) in f.iter().zip(&t) {
                let z = a * fi + b;
                let (p, q) = if z >= 0.0 {
                    let e = (-z).exp();
                    (e / (1.0 + e), 1.0 / (1.0 + e))
                } else {
                    let e = z.exp();
                    (1.0 / (1.0 + e), e / (1.0 + e))
                };
                let d2 = p * q;
                h11 += fi * fi * d2;
                h22 += d2;
                h21 += fi * d2;
                let d1 = ti - p;
                ga += fi * d1;
                gb += d1;
            }
            if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
                break;
            }
            let det = h11 * h22 - h21 * h21;
            let da = -(h22 * ga - h21 * gb) / det;
            let db = -(-h21 * ga + h11 * gb) / det;
            let gd = ga * da + gb * db;
            let mut step = 1.0;
            let mut improved = false;
            while step >= 1e-10 {
                let (na, nb) = (a + step * da, b + step * db);
                let nv = objective(na, nb);
                if nv < value + 1e-4 * step * gd {
                    a = na;
                    b = nb;
                    value = nv;
                    improved = true;
                    break;
                }
                step /= 2.0;
            }
            if !improved {
                break;
            }
        }
        Ok(Self { a, b })
    }
}

/// Binary models carry one scaler for the positive class; multi-class
/// models carry one per class (one-vs-rest) and renormalize afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibrator {
    pub scalers: Vec<PlattScaler>,
}

impl Calibrator {
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        let mut out = if raw.len() == 2 && self.scalers.len() == 1 {
            let p = self.scalers[0].apply(raw[1]);
            vec![1.0 - p, p]
        } else {
            raw.iter()
                .zip(&self.scalers)
                .map(|(&s, sc)| sc.apply(s))
                .collect()
        };
        crate::types::normalize_simplex(&mut out);
        out
    }

    pub fn identity(n_classes: usize) -> Self {
        let n = if n_classes == 2 { 1 } else { n_classes };
        Self {
            scalers: vec![PlattScaler::IDENTITY; n],
        }
    }

    /// Fits on raw probability rows and their true class indices.
    pub fn fit(
        raw: &[Vec<f64>],
        labels: &[usize],
        n_classes: usize,
    ) -> Result<Self, ForecastError> {
        let present = {
            let mut seen = vec![false; n_classes];
            labels.iter().for_each(|&l| seen[l] = true);
            seen.iter().filter(|&&s| s).count()
        };
        if present < 2 {
            return Err(ForecastError::DegenerateLabels(
                "calibration holdout has a single class".into(),
            ));
        }
        if n_classes == 2 {
            let scores: Vec<f64> = raw.iter().map(|r| r[1]).collect();
            let pos: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
            return Ok(Self {
                scalers: vec![PlattScaler::fit(&scores, &pos)?],
            });
        }
        let scalers = (0..n_classes)
            .map(|c| {
                let scores: Vec<f64> = raw.iter().map(|r| r[c]).collect();
                let pos: Vec<bool> = labels.iter().map(|&l| l == c).collect();
                if pos.iter().all(|&p| p) || pos.iter().all(|&p| !p) {
                    Ok(PlattScaler::IDENTITY)
                } else {
                    PlattScaler::fit(&scores, &pos)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { scalers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecasting::metrics::brier_score;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sigmoid(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn identity_scaler_is_a_no_op() {
        for s in [0.01, 0.3, 0.5, 0.77, 0.99] {
            assert!((PlattScaler::IDENTITY.apply(s) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn calibrated_scores_fit_near_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..20_000 {
            let p: f64 = sigmoid(rng.random_range(-3.0..3.0));
            scores.push(p);
            labels.push(rng.random::<f64>() < p);
        }
        let fit = PlattScaler::fit(&scores, &labels).unwrap();
        assert!((fit.a + 1.0).abs() < 0.1, "a = {}", fit.a);
        assert!(fit.b.abs() < 0.1, "b = {}", fit.b);
        let raw: Vec<Vec<f64>> = scores.iter().map(|&s| vec![1.0 - s, s]).collect();
        let cal: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let p = fit.apply(r[1]);
                vec![1.0 - p, p]
            })
            .collect();
        let y: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        assert!((brier_score(&raw, &y) - brier_score(&cal, &y)).abs() < 1e-3);
    }

    #[test]
    fn single_class_holdout_errors() {
        assert!(PlattScaler::fit(&[0.2, 0.4], &[true, true]).is_err());
        assert!(Calibrator::fit(&[vec![0.5, 0.5]], &[0], 2).is_err());
    }

    #[test]
    fn overconfidence_is_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (mut raw, mut y) = (Vec::new(), Vec::new());
        for _ in 0..4000 {
            let hit = rng.random::<f64>() < 0.7;
            let s = if rng.random::<bool>() { 0.99 } else { 0.01 };
            // true positive frequency is 0.7 when the model says 0.99
            let label = if s > 0.5 { hit } else { !hit };
            raw.push(vec![1.0 - s, s]);
            y.push(label as usize);
        }
        let cal = Calibrator::fit(&raw, &y, 2).unwrap();
        let after: Vec<Vec<f64>> = raw.iter().map(|r| cal.apply(r)).collect();
        assert!(brier_score(&after, &y) < brier_score(&raw, &y));
        assert!((after[0][1] - 0.7).abs() < 0.05 || (after[0][1] - 0.3).abs() < 0.05);
    }
}
