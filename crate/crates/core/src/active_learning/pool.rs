//! Pool-based selection: score every unlabeled candidate, keep the top `b`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::strategy::{
    diversity, normalized_entropy, normalized_vote_entropy, pool_diameter, representativeness,
    score_informativeness, StrategyName, StrategyParams, Uncertainty,
};
use super::ActiveLearningError;
use crate::exec::Exec;
use crate::forecasting::ProbaModel;
use crate::types::argmax;

/// What the strategies may look at when scoring a pool.
pub struct PoolContext<'a> {
    pub pool: &'a [Vec<f64>],
    pub labeled: &'a [Vec<f64>],
    /// Current model; `None` treats every candidate as maximally uncertain.
    pub model: Option<&'a dyn ProbaModel>,
    pub committee: &'a [&'a dyn ProbaModel],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSelection {
    /// `(pool index, score)` in selection order.
    pub picks: Vec<(usize, f64)>,
    /// The batch was larger than the pool, so the whole pool was taken.
    pub truncated: bool,
}

impl PoolSelection {
    pub fn indices(&self) -> Vec<usize> {
        self.picks.iter().map(|p| p.0).collect()
    }
}

fn model_uncertainty(
    model: Option<&dyn ProbaModel>,
    x: &[f64],
    kind: Uncertainty,
) -> Result<f64, ActiveLearningError> {
    match model {
        None => Ok(1.0),
        Some(m) => {
            let p = m.predict_proba(x)?;
            score_informativeness(&p, kind)
        }
    }
}

/// Per-candidate score of the configured strategy, each in `[0, 1]`.
/// `Random` scores are all zero; ordering for it comes from the seed.
pub fn pool_scores(
    ctx: &PoolContext<'_>,
    params: &StrategyParams,
    exec: Exec,
) -> Result<Vec<f64>, ActiveLearningError> {
    params.validate()?;
    if ctx.pool.is_empty() {
        return Err(ActiveLearningError::EmptyPool);
    }
    if params.name == StrategyName::QbcVoteEntropy {
        if ctx.committee.len() < 2 {
            return Err(ActiveLearningError::InvalidParams(
                "committee needs at least 2 members".into(),
            ));
        }
        let k = ctx.committee[0].n_classes();
        if ctx.committee.iter().any(|m| m.n_classes() != k) {
            return Err(ActiveLearningError::CommitteeMismatch);
        }
    }
    let diameter = match params.name {
        StrategyName::Combined => pool_diameter(ctx.pool),
        _ => 0.0,
    };
    let scored = exec.map(ctx.pool, |x| -> Result<f64, ActiveLearningError> {
        Ok(match params.name {
            StrategyName::Random => 0.0,
            StrategyName::LeastConfidence => {
                model_uncertainty(ctx.model, x, Uncertainty::LeastConfidence)?
            }
            StrategyName::Margin => model_uncertainty(ctx.model, x, Uncertainty::Margin)?,
            StrategyName::Entropy => model_uncertainty(ctx.model, x, Uncertainty::Entropy)?,
            StrategyName::QbcVoteEntropy => {
                let votes: Vec<usize> = ctx
                    .committee
                    .iter()
                    .map(|m| m.predict_proba(x).map(|p| argmax(&p)))
                    .collect::<Result<_, _>>()?;
                normalized_vote_entropy(&votes, ctx.committee[0].n_classes())
            }
            StrategyName::Combined => {
                let info = match ctx.model {
                    None => 1.0,
                    Some(m) => normalized_entropy(&m.predict_proba(x)?).clamp(0.0, 1.0),
                };
                let (a, b, g) = params.weights;
                a * info
                    + b * representativeness(x, ctx.pool, params.sigma)
                    + g * diversity(x, ctx.labeled, diameter)
            }
        })
    });
    scored.into_iter().collect()
}

/// Indices of the `b` largest scores, ties broken by lower index.
pub fn top_b(scores: &[f64], b: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    order.truncate(b);
    order
}

/// Picks a batch of `b` candidates. Asking for more than the pool holds
/// selects the entire pool and flags the result as truncated.
pub fn select_pool(
    ctx: &PoolContext<'_>,
    params: &StrategyParams,
    batch: usize,
    seed: u64,
    exec: Exec,
) -> Result<PoolSelection, ActiveLearningError> {
    if batch == 0 {
        return Err(ActiveLearningError::InvalidParams(
            "batch size must be at least 1".into(),
        ));
    }
    let scores = pool_scores(ctx, params, exec)?;
    let truncated = batch > scores.len();
    if truncated {
        tracing::warn!(
            batch,
            pool = scores.len(),
            "batch exceeds pool, selecting all"
        );
    }
    let picks: Vec<usize> = if params.name == StrategyName::Random {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order.truncate(batch);
        order
    } else {
        top_b(&scores, batch)
    };
    Ok(PoolSelection {
        picks: picks.into_iter().map(|i| (i, scores[i])).collect(),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FirstFeature;
    impl ProbaModel for FirstFeature {
        fn n_classes(&self) -> usize {
            2
        }
        fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, crate::forecasting::ForecastError> {
            let p = x[0].clamp(0.0, 1.0);
            Ok(vec![1.0 - p, p])
        }
    }

    fn ctx<'a>(
        pool: &'a [Vec<f64>],
        labeled: &'a [Vec<f64>],
        model: &'a FirstFeature,
    ) -> PoolContext<'a> {
        PoolContext {
            pool,
            labeled,
            model: Some(model),
            committee: &[],
        }
    }

    #[test]
    fn whole_pool_when_batch_matches() {
        let pool: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        for name in [
            StrategyName::Random,
            StrategyName::Entropy,
            StrategyName::Combined,
        ] {
            let sel = select_pool(
                &ctx(&pool, &[], &FirstFeature),
                &StrategyParams::named(name),
                6,
                1,
                Exec::Sequential,
            )
            .unwrap();
            let mut idx = sel.indices();
            idx.sort_unstable();
            assert_eq!(idx, (0..6).collect::<Vec<_>>());
            assert!(!sel.truncated);
        }
        let over = select_pool(
            &ctx(&pool, &[], &FirstFeature),
            &StrategyParams::default(),
            10,
            1,
            Exec::Sequential,
        )
        .unwrap();
        assert!(over.truncated);
        assert_eq!(over.picks.len(), 6);
    }

    #[test]
    fn entropy_picks_the_uncertain_sample() {
        let pool = vec![vec![0.0], vec![1.0], vec![0.5], vec![0.0]];
        let sel = select_pool(
            &ctx(&pool, &[], &FirstFeature),
            &StrategyParams::named(StrategyName::Entropy),
            1,
            0,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(sel.picks, vec![(2, 1.0)]);
    }

    #[test]
    fn random_is_reproducible() {
        let pool: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let p = StrategyParams::named(StrategyName::Random);
        let a = select_pool(&ctx(&pool, &[], &FirstFeature), &p, 5, 9, Exec::Sequential).unwrap();
        let b = select_pool(&ctx(&pool, &[], &FirstFeature), &p, 5, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(top_b(&[0.5, 0.9, 0.5, 0.9], 3), vec![1, 3, 0]);
    }

    #[test]
    fn qbc_requires_matching_committee() {
        let pool = vec![vec![0.4]];
        let m = FirstFeature;
        let committee: [&dyn ProbaModel; 1] = [&m];
        let c = PoolContext {
            pool: &pool,
            labeled: &[],
            model: None,
            committee: &committee,
        };
        assert!(pool_scores(
            &c,
            &StrategyParams::named(StrategyName::QbcVoteEntropy),
            Exec::Sequential
        )
        .is_err());
    }
}
