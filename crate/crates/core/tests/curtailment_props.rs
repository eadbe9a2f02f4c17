use std::collections::BTreeSet;

use mer_sizing::curtailment::{
    build_reconfig_cache, classify_islands, expected_load_curtailment, load_curtailment, IslandKind, MerPlacement,
};
use mer_sizing::fixtures;
use mer_sizing::hazard::OutageScenario;
use mer_sizing::network::NodeId;
use mer_sizing::reduction::ReducedScenarioSet;
use proptest::prelude::*;

fn outage_and_locations() -> impl Strategy<Value = (BTreeSet<u32>, BTreeSet<NodeId>, f64, f64, NodeId)> {
    (
        prop::collection::btree_set(1u32..=37, 0..20),
        prop::collection::btree_set(1u32..=33, 1..8),
        1.0f64..800.0,
        0.0f64..800.0,
        1u32..=33,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn curtailment_bounds_and_monotonicity((outaged, locs, unit, extra, added) in outage_and_locations()) {
        let net = fixtures::ieee33();
        let r = OutageScenario::new(0, outaged).reconfigure(&net);
        let base = MerPlacement::new(unit, locs.iter().copied());
        let lc = load_curtailment(&net, &r, &base).unwrap();
        prop_assert!(lc >= 0.0 && lc <= net.total_critical_kw());

        let bigger = MerPlacement::new(unit + extra, locs.iter().copied());
        prop_assert!(load_curtailment(&net, &r, &bigger).unwrap() <= lc);

        let mut more = locs.clone();
        more.insert(added);
        prop_assert!(load_curtailment(&net, &r, &MerPlacement::new(unit, more)).unwrap() <= lc);

        for island in classify_islands(&net, &r, &base).unwrap() {
            if island.kind == IslandKind::Grid {
                prop_assert_eq!(island.curtailed_kw, 0.0);
                prop_assert!(island.nodes.contains(&net.source_node()));
            }
            if island.kind == IslandKind::Isolate {
                prop_assert_eq!(island.curtailed_kw, island.critical_load_kw);
                prop_assert_eq!(island.mer_count, 0);
            }
        }
    }

    #[test]
    fn elc_is_linear_in_probabilities(
        outs in prop::collection::vec(prop::collection::btree_set(1u32..=37, 0..15), 3),
        w in prop::collection::vec(0.01f64..1.0, 3),
        scale in 0.1f64..3.0,
    ) {
        let net = fixtures::ieee33();
        let make = |probs: Vec<f64>| ReducedScenarioSet {
            scenarios: outs.iter().cloned().enumerate().map(|(i, s)| OutageScenario::new(i, s)).zip(probs).collect(),
            k: 3,
            population: 3,
            inertia: 0.0,
        };
        let set = make(w.clone());
        let cache = build_reconfig_cache(&net, &set);
        let placement = MerPlacement::new(120.0, [7, 18, 30]);
        let elc = expected_load_curtailment(&net, &set, &placement, &cache).unwrap();
        let scaled = make(w.iter().map(|p| p * scale).collect());
        let elc_scaled = expected_load_curtailment(&net, &scaled, &placement, &cache).unwrap();
        prop_assert!((elc_scaled - scale * elc).abs() < 1e-9 * (1.0 + elc));
    }
}
