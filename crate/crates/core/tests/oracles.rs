//! Fast implementations checked against literal reference implementations.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use workbench_core::active_learning::strategy::{normalized_vote_entropy, vote_entropy};
use workbench_core::active_learning::{pool_scores, PoolContext, StrategyName, StrategyParams};
use workbench_core::forecasting::mutual_info::mutual_information;
use workbench_core::forecasting::{
    auc_pair_count, auc_trapezoid, forecast_croston, rank_features_mi, spec_metric, CrostonVariant,
    ProbaModel, SpecParams,
};
use workbench_core::types::{GrayImage, LabeledSet};
use workbench_core::xai::{ssim, ssim_direct, SsimParams};
use workbench_core::Exec;

#[test]
fn ssim_integral_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = SsimParams::default();
    for _ in 0..50 {
        let a = GrayImage::from_pixels(16, 16, (0..256).map(|_| rng.random()).collect()).unwrap();
        let b = GrayImage::from_pixels(16, 16, (0..256).map(|_| rng.random()).collect()).unwrap();
        let fast = ssim(&a, &b, &params).unwrap();
        let slow = ssim_direct(&a, &b, &params).unwrap();
        assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
    }
}

#[test]
fn mi_ranking_matches_joint_tables() {
    // Four features with four levels each against a binary label.
    let labels: Vec<usize> = (0..16).map(|i| i % 2).collect();
    let columns: Vec<Vec<f64>> = vec![
        (0..16).map(|i| (i % 4) as f64).collect(),
        (0..16).map(|i| ((i / 2) % 4) as f64).collect(),
        (0..16)
            .map(|i| if i % 2 == 0 { (i % 3) as f64 } else { 3.0 })
            .collect(),
        (0..16).map(|i| ((i * 7) % 4) as f64).collect(),
    ];
    let features: Vec<Vec<f64>> = (0..16)
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect();
    let data = LabeledSet::new(features, labels.clone(), vec!["a".into(), "b".into()]).unwrap();
    let ranked = rank_features_mi(&data, 4).unwrap();

    let mut expected: Vec<(usize, f64)> = columns
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let mut table = vec![vec![0usize; 2]; 4];
            for (v, &y) in col.iter().zip(&labels) {
                table[*v as usize][y] += 1;
            }
            (j, common::mi_from_table(&table))
        })
        .collect();
    expected.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (got, (idx, mi)) in ranked.iter().zip(&expected) {
        assert_eq!(got.index, *idx);
        assert!((got.mi - mi).abs() <= 1e-9);
    }
    for (j, col) in columns.iter().enumerate() {
        let direct = mutual_information(col, &labels, 2, 4);
        assert!((direct - expected.iter().find(|e| e.0 == j).unwrap().1).abs() <= 1e-9);
    }
}

#[test]
fn auc_pair_count_matches_trapezoid_and_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(4..60);
        // Coarse scores create ties.
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..10) as f64) / 10.0)
            .collect();
        let mut positive: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        positive[0] = true;
        positive[1] = false;
        let a = auc_pair_count(&scores, &positive).unwrap();
        let b = auc_trapezoid(&scores, &positive).unwrap();
        let c = common::auc_enumerated(&scores, &positive);
        assert!(
            (a - b).abs() <= 1e-9 && (a - c).abs() <= 1e-9,
            "{a} {b} {c}"
        );
    }
}

#[test]
fn spec_matches_nested_loop_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let n = rng.random_range(1..25);
        let y: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.4 {
                    rng.random_range(0.0..10.0)
                } else {
                    0.0
                }
            })
            .collect();
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let p = SpecParams::new(rng.random_range(0.0..1.0), rng.random_range(0.1..1.0)).unwrap();
        let fast = spec_metric(&y, &f, p).unwrap();
        let slow = common::spec_literal(&y, &f, p);
        assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");
    }
    let half = SpecParams::default();
    assert!((spec_metric(&[3.0, 0.0], &[0.0, 3.0], half).unwrap() - 0.75).abs() < 1e-12);
}

#[test]
fn vote_entropy_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let k = rng.random_range(2..6);
        let c = rng.random_range(2..9);
        let votes: Vec<usize> = (0..c).map(|_| rng.random_range(0..k)).collect();
        let oracle = common::vote_entropy_enumerated(&votes, k);
        assert!((vote_entropy(&votes, k) - oracle).abs() <= 1e-9);
        let cap = c.min(k) as f64;
        assert!((normalized_vote_entropy(&votes, k) - oracle / cap.ln()).abs() <= 1e-9);
    }
}

type Member = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync>;

#[test]
fn qbc_pool_scores_match_enumerated_votes() {
    let members: Vec<(usize, Member)> = (0..4)
        .map(|m| {
            let f: Member = Box::new(move |x: &[f64]| {
                let cls = ((x[0] * 3.0 + m as f64).floor() as usize) % 3;
                let mut p = vec![0.1; 3];
                p[cls] = 0.8;
                p
            });
            (3usize, f)
        })
        .collect();
    let committee: Vec<&dyn ProbaModel> = members.iter().map(|m| m as &dyn ProbaModel).collect();
    let pool: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 7.0]).collect();
    let ctx = PoolContext {
        pool: &pool,
        labeled: &[],
        model: None,
        committee: &committee,
    };
    let params = StrategyParams::named(StrategyName::QbcVoteEntropy);
    let scores = pool_scores(&ctx, &params, Exec::Sequential).unwrap();
    for (x, s) in pool.iter().zip(&scores) {
        let votes: Vec<usize> = (0..4)
            .map(|m| ((x[0] * 3.0 + m as f64).floor() as usize) % 3)
            .collect();
        let expected = common::vote_entropy_enumerated(&votes, 3) / 3f64.ln();
        assert!((s - expected).abs() <= 1e-9);
    }
}

#[test]
fn batch_net_gradients_match_central_differences() {
    for seed in 0..20 {
        let err = common::gradient_check(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn croston_fixpoints() {
    let constant = forecast_croston(&[4.0; 12], 0.1, CrostonVariant::Classic).unwrap();
    assert_eq!(constant.forecast(), 4.0);
    let lumpy: Vec<f64> = (0..24)
        .map(|i| if i % 3 == 2 { 6.0 } else { 0.0 })
        .collect();
    let classic = forecast_croston(&lumpy, 0.1, CrostonVariant::Classic).unwrap();
    assert_eq!(classic.forecast(), 2.0);
    let sba = forecast_croston(&lumpy, 0.1, CrostonVariant::Sba).unwrap();
    assert!((sba.forecast() - 0.95 * classic.forecast()).abs() <= 1e-12);
}
