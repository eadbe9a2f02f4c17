//! Island classification and critical load curtailment.
//!
//! Each island of a reconfigured scenario is either fed by the grid, a
//! microgrid formed around one or more MERs, or an unserved isolate. Power
//! balance is enforced per island: a microgrid sheds whatever critical load
//! exceeds the combined capacity of its MERs.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::network::{Network, NodeId, Reconfiguration};
use crate::reduction::ReducedScenarioSet;

#[derive(Debug, Error, PartialEq)]
pub enum CurtailmentError {
    #[error("placement references unknown node {0}")]
    UnknownNode(NodeId),
    #[error("placement has no locations")]
    EmptyPlacement,
    #[error("MER unit size must be positive and finite, got {0}")]
    InvalidUnitSize(f64),
    #[error("no reconfiguration cached for scenario {0}")]
    MissingReconfiguration(usize),
}

/// Equal-sized MERs, one per listed node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MerPlacement {
    pub unit_size_kw: f64,
    pub locations: BTreeSet<NodeId>,
}

impl MerPlacement {
    pub fn new(unit_size_kw: f64, locations: impl IntoIterator<Item = NodeId>) -> Self {
        Self {
            unit_size_kw,
            locations: locations.into_iter().collect(),
        }
    }

    pub fn validate(&self, network: &Network) -> Result<(), CurtailmentError> {
        if !(self.unit_size_kw.is_finite() && self.unit_size_kw > 0.0) {
            return Err(CurtailmentError::InvalidUnitSize(self.unit_size_kw));
        }
        if self.locations.is_empty() {
            return Err(CurtailmentError::EmptyPlacement);
        }
        match self.locations.iter().find(|&&n| !network.contains_node(n)) {
            Some(&n) => Err(CurtailmentError::UnknownNode(n)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IslandKind {
    Grid,
    Microgrid,
    Isolate,
}

impl std::fmt::Display for IslandKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IslandKind::Grid => "grid",
            IslandKind::Microgrid => "microgrid",
            IslandKind::Isolate => "isolate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IslandReport {
    pub island: usize,
    pub kind: IslandKind,
    pub nodes: Vec<NodeId>,
    pub critical_load_kw: f64,
    pub mer_count: usize,
    pub mer_capacity_kw: f64,
    pub curtailed_kw: f64,
}

/// Weighted critical load per island, summed in ascending node order.
pub(crate) fn island_critical_loads(network: &Network, reconfig: &Reconfiguration) -> Vec<f64> {
    let mut loads = vec![0.0; reconfig.island_count];
    for (load, &isl) in network.loads().iter().zip(&reconfig.island_of) {
        loads[isl] += load.weighted_critical_kw();
    }
    loads
}

/// Critical load a microgrid with `mers` units of `unit_kw` cannot serve.
#[inline]
pub(crate) fn microgrid_deficit(load_kw: f64, mers: usize, unit_kw: f64) -> f64 {
    (load_kw - unit_kw * mers as f64).max(0.0)
}

pub fn classify_islands(
    network: &Network,
    reconfig: &Reconfiguration,
    placement: &MerPlacement,
) -> Result<Vec<IslandReport>, CurtailmentError> {
    placement.validate(network)?;
    let loads = island_critical_loads(network, reconfig);
    let mut mers = vec![0usize; reconfig.island_count];
    for &node in &placement.locations {
        let isl = reconfig
            .island_of_node(network, node)
            .ok_or(CurtailmentError::UnknownNode(node))?;
        mers[isl] += 1;
    }
    let islands = reconfig.islands(network);
    Ok(islands
        .into_iter()
        .enumerate()
        .map(|(isl, nodes)| {
            let load = loads[isl];
            let count = mers[isl];
            let kind = if isl == 0 && reconfig.grid_energized {
                IslandKind::Grid
            } else if count > 0 {
                IslandKind::Microgrid
            } else {
                IslandKind::Isolate
            };
            let curtailed_kw = match kind {
                IslandKind::Grid => 0.0,
                IslandKind::Microgrid => microgrid_deficit(load, count, placement.unit_size_kw),
                IslandKind::Isolate => load,
            };
            IslandReport {
                island: isl,
                kind,
                nodes,
                critical_load_kw: load,
                mer_count: count,
                mer_capacity_kw: placement.unit_size_kw * count as f64,
                curtailed_kw,
            }
        })
        .collect())
}

/// Total curtailed critical load (kW) of one scenario.
pub fn load_curtailment(
    network: &Network,
    reconfig: &Reconfiguration,
    placement: &MerPlacement,
) -> Result<f64, CurtailmentError> {
    Ok(classify_islands(network, reconfig, placement)?
        .iter()
        .fold(0.0, |acc, r| acc + r.curtailed_kw))
}

/// Reconfigurations keyed by scenario id.
pub type ReconfigCache = BTreeMap<usize, Reconfiguration>;

pub fn build_reconfig_cache(network: &Network, reduced: &ReducedScenarioSet) -> ReconfigCache {
    reduced
        .scenarios
        .par_iter()
        .map(|(s, _)| (s.id, s.reconfigure(network)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Probability-weighted curtailment over the reduced scenarios, accumulated
/// in ascending scenario id.
pub fn expected_load_curtailment(
    network: &Network,
    reduced: &ReducedScenarioSet,
    placement: &MerPlacement,
    cache: &ReconfigCache,
) -> Result<f64, CurtailmentError> {
    let mut ordered: Vec<_> = reduced.scenarios.iter().collect();
    ordered.sort_by_key(|(s, _)| s.id);
    let mut elc = 0.0;
    for (s, p) in ordered {
        let r = cache
            .get(&s.id)
            .ok_or(CurtailmentError::MissingReconfiguration(s.id))?;
        elc += p * load_curtailment(network, r, placement)?;
    }
    Ok(elc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::hazard::OutageScenario;
    use crate::network::{kruskal_spanning_forest, Branch, NodeLoad};

    fn fig5() -> (Network, Reconfiguration) {
        let net = fixtures::ieee33();
        let r = OutageScenario::new(0, [3, 6, 15, 19, 25, 30, 32]).reconfigure(&net);
        (net, r)
    }

    #[test]
    fn fig5_island_table() {
        let (net, r) = fig5();
        let placement = MerPlacement::new(300.0, [6, 11, 15, 22]);
        let reports = classify_islands(&net, &r, &placement).unwrap();
        let by_first = |n: NodeId| reports.iter().find(|x| x.nodes.contains(&n)).unwrap();

        assert_eq!(by_first(1).kind, IslandKind::Grid);
        let mg1 = by_first(4);
        assert_eq!((mg1.kind, mg1.critical_load_kw, mg1.mer_capacity_kw, mg1.curtailed_kw),
            (IslandKind::Microgrid, 150.0, 300.0, 0.0));
        let mg2 = by_first(7);
        assert_eq!((mg2.kind, mg2.critical_load_kw, mg2.mer_capacity_kw, mg2.curtailed_kw),
            (IslandKind::Microgrid, 650.0, 900.0, 0.0));
        let il1 = by_first(31);
        assert_eq!((il1.kind, il1.curtailed_kw), (IslandKind::Isolate, 0.0));
        let il2 = by_first(16);
        assert_eq!((il2.kind, il2.curtailed_kw), (IslandKind::Isolate, 75.0));
        assert_eq!(load_curtailment(&net, &r, &placement).unwrap(), 75.0);
    }

    #[test]
    fn no_outage_means_no_curtailment() {
        let net = fixtures::ieee33();
        let r = kruskal_spanning_forest(&net, &BTreeSet::new());
        let reports = classify_islands(&net, &r, &MerPlacement::new(10.0, [18])).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].kind, IslandKind::Grid);
        assert_eq!(reports[0].curtailed_kw, 0.0);
    }

    #[test]
    fn singleton_isolate_curtails_its_own_load() {
        let net = fixtures::ieee33();
        let all: BTreeSet<_> = net.branch_ids().collect();
        let r = kruskal_spanning_forest(&net, &all);
        let reports = classify_islands(&net, &r, &MerPlacement::new(100.0, [4])).unwrap();
        let n18 = reports.iter().find(|x| x.nodes == vec![18]).unwrap();
        assert_eq!(n18.kind, IslandKind::Isolate);
        assert_eq!(n18.curtailed_kw, 45.0);
    }

    #[test]
    fn microgrid_deficit_is_clamped() {
        let net = Network::new(
            vec![NodeLoad::new(1, 0.0, 0.0), NodeLoad::new(2, 100.0, 100.0)],
            vec![Branch::new(1, 1, 2, false)],
            1,
        )
        .unwrap();
        let r = kruskal_spanning_forest(&net, &[1].into());
        assert_eq!(load_curtailment(&net, &r, &MerPlacement::new(40.0, [2])).unwrap(), 60.0);
        assert_eq!(load_curtailment(&net, &r, &MerPlacement::new(400.0, [2])).unwrap(), 0.0);
    }

    #[test]
    fn zero_critical_load_never_curtails() {
        let loads = (1..=3).map(|n| NodeLoad::new(n, 50.0, 0.0)).collect();
        let net = Network::new(
            loads,
            vec![Branch::new(1, 1, 2, false), Branch::new(2, 2, 3, false)],
            1,
        )
        .unwrap();
        let r = kruskal_spanning_forest(&net, &[1, 2].into());
        assert_eq!(load_curtailment(&net, &r, &MerPlacement::new(1.0, [3])).unwrap(), 0.0);
    }

    #[test]
    fn lost_source_island_needs_mers() {
        let net = fixtures::ieee33();
        let mut s = OutageScenario::new(0, []);
        s.source_out = true;
        let r = s.reconfigure(&net);
        let lc = load_curtailment(&net, &r, &MerPlacement::new(1000.0, [8])).unwrap();
        assert_eq!(lc, 265.0);
    }

    #[test]
    fn invalid_placements_rejected() {
        let (net, r) = fig5();
        assert_eq!(
            classify_islands(&net, &r, &MerPlacement::new(300.0, [99])),
            Err(CurtailmentError::UnknownNode(99))
        );
        assert_eq!(
            classify_islands(&net, &r, &MerPlacement::new(0.0, [6])),
            Err(CurtailmentError::InvalidUnitSize(0.0))
        );
        assert_eq!(
            classify_islands(&net, &r, &MerPlacement::new(1.0, [])),
            Err(CurtailmentError::EmptyPlacement)
        );
    }

    fn reduced(items: Vec<(OutageScenario, f64)>) -> ReducedScenarioSet {
        ReducedScenarioSet {
            k: items.len(),
            population: items.len(),
            inertia: 0.0,
            scenarios: items,
        }
    }

    #[test]
    fn expectation_weights_scenarios() {
        let net = fixtures::ieee33();
        let fig5 = OutageScenario::new(0, [3, 6, 15, 19, 25, 30, 32]);
        let placement = MerPlacement::new(300.0, [6, 11, 15, 22]);

        let one = reduced(vec![(fig5.clone(), 1.0)]);
        let cache = build_reconfig_cache(&net, &one);
        assert_eq!(expected_load_curtailment(&net, &one, &placement, &cache).unwrap(), 75.0);

        // 75 kW and 0 kW with equal weight.
        let two = reduced(vec![(fig5, 0.5), (OutageScenario::new(1, []), 0.5)]);
        let cache = build_reconfig_cache(&net, &two);
        assert_eq!(expected_load_curtailment(&net, &two, &placement, &cache).unwrap(), 37.5);

        let mut partial = cache.clone();
        partial.remove(&1);
        assert_eq!(
            expected_load_curtailment(&net, &two, &placement, &partial),
            Err(CurtailmentError::MissingReconfiguration(1))
        );
    }

    #[test]
    fn every_node_with_ample_capacity_gives_zero() {
        let net = fixtures::ieee33();
        let set = reduced(vec![
            (OutageScenario::new(0, [3, 6, 15]), 0.25),
            (OutageScenario::new(1, net.branch_ids()), 0.75),
        ]);
        let cache = build_reconfig_cache(&net, &set);
        let placement = MerPlacement::new(net.total_critical_kw(), net.nodes().iter().copied());
        assert_eq!(expected_load_curtailment(&net, &set, &placement, &cache).unwrap(), 0.0);
    }
}
