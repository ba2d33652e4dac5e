//! Property-based invariants across modules.

use proptest::prelude::*;

use workbench_core::forecasting::{
    auc_pair_count, auc_trapezoid, forecast_croston, CrostonVariant,
};
use workbench_core::intention::{safe_zone_command, SafeZoneState};
use workbench_core::security::{verify_bytes, Action, AuditLog, Effect, PolicySet, ROLES};
use workbench_core::simulation::{BalancerConfig, StreamBalancer, StreamItem};
use workbench_core::types::Provenance;
use workbench_core::Exec;

fn audit_bytes(n: usize) -> Vec<u8> {
    let log = AuditLog::in_memory();
    for i in 0..n {
        log.append_at(
            1_700_000_000_000 + i as i64,
            "admin",
            "write",
            &format!("/policies/{i}"),
            "allow",
        )
        .unwrap();
    }
    log.entries()
        .iter()
        .flat_map(|e| format!("{}\n", serde_json::to_string(e).unwrap()).into_bytes())
        .collect()
}

fn resource() -> impl Strategy<Value = String> {
    prop::collection::vec("[a-z0-9_]{1,8}", 1..5).prop_map(|segs| format!("/{}", segs.join("/")))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn empty_policy_set_denies_everything(
        role in prop_oneof![prop::sample::select(ROLES.to_vec()).prop_map(String::from), "[a-z]{1,10}"],
        res in resource(),
        write in any::<bool>(),
    ) {
        let action = if write { Action::Write } else { Action::Read };
        let d = PolicySet::new(Vec::new()).evaluate(&role, &res, action);
        prop_assert_eq!(d.effect, Effect::Deny);
        prop_assert!(d.policy_id.is_none());
    }

    #[test]
    fn larger_buffer_is_never_less_cautious(
        px in -10.0..10.0f64, py in -10.0..10.0f64,
        dx in -5.0..5.0f64, dy in -5.0..5.0f64,
        b1 in 0.0..3.0f64, extra in 0.0..3.0f64,
    ) {
        let corridor = vec![(0.0, -1.0), (20.0, -1.0), (20.0, 1.0), (0.0, 1.0)];
        let state = |buffer| SafeZoneState { position: (px, py), displacement: (dx, dy), corridor: corridor.clone(), buffer };
        let small = safe_zone_command(&state(b1)).unwrap();
        let large = safe_zone_command(&state(b1 + extra)).unwrap();
        prop_assert!(large.caution() >= small.caution());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn any_single_byte_change_breaks_the_chain(n in 1usize..8, pos in any::<prop::sample::Index>(), xor in 1u8..=255) {
        let mut bytes = audit_bytes(n);
        prop_assert!(verify_bytes(&bytes).valid);
        let i = pos.index(bytes.len());
        bytes[i] ^= xor;
        prop_assert!(!verify_bytes(&bytes).valid);
    }

    #[test]
    fn croston_ignores_leading_zeros(
        series in prop::collection::vec(prop_oneof![Just(0.0), 0.5..20.0f64], 1..40),
        lead in 0usize..10,
        alpha in 0.01..0.99f64,
    ) {
        prop_assume!(series.iter().any(|&q| q > 0.0));
        let mut padded = vec![0.0; lead];
        padded.extend_from_slice(&series);
        let a = forecast_croston(&series, alpha, CrostonVariant::Classic).unwrap().forecast();
        let b = forecast_croston(&padded, alpha, CrostonVariant::Classic).unwrap().forecast();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn auc_definitions_agree(rows in prop::collection::vec((0u8..6, any::<bool>()), 2..80)) {
        let scores: Vec<f64> = rows.iter().map(|r| r.0 as f64).collect();
        let positive: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let a = auc_pair_count(&scores, &positive);
        let b = auc_trapezoid(&scores, &positive);
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((a - b).abs() <= 1e-9);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn exec_modes_agree(values in prop::collection::vec(-1e6..1e6f64, 0..300)) {
        let f = |x: &f64| x.sin() * x.abs().sqrt();
        prop_assert_eq!(Exec::Sequential.map(&values, f), Exec::Parallel.map(&values, f));
    }

    #[test]
    fn balancer_passes_every_real_item_once(
        defects in prop::collection::vec(prop::bool::weighted(0.05), 1..400),
        reserve in 0usize..200,
    ) {
        let mut b = StreamBalancer::new(BalancerConfig::default()).unwrap();
        for i in 0..reserve {
            b.add_reserve(StreamItem { sample_id: format!("r{i}"), defect: true, provenance: Provenance::Synthetic }).unwrap();
        }
        let mut real_out = Vec::new();
        for (i, &d) in defects.iter().enumerate() {
            let out = b.process(StreamItem { sample_id: format!("x{i}"), defect: d, provenance: Provenance::Real });
            real_out.extend(out.emitted.into_iter().filter(|it| it.provenance.is_real()).map(|it| it.sample_id));
        }
        let expected: Vec<String> = (0..defects.len()).map(|i| format!("x{i}")).collect();
        prop_assert_eq!(real_out, expected);
        let stats = b.production_stats();
        prop_assert_eq!(stats.real_items, defects.len());
        prop_assert_eq!(stats.real_defects, defects.iter().filter(|&&d| d).count());
    }
}
