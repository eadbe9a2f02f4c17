//! Shared fixtures for the integration suites: a 12-node toy feeder with an
//! independent curtailment oracle, and random small graphs.
#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use mer_sizing::hazard::OutageScenario;
use mer_sizing::network::{Branch, Network, NodeLoad};
use mer_sizing::reduction::ReducedScenarioSet;
use rand::Rng;

pub const TOY_BRANCHES: [(u32, u32, u32, bool); 13] = [
    (1, 1, 2, false),
    (2, 2, 3, false),
    (3, 3, 4, false),
    (4, 4, 5, false),
    (5, 2, 6, false),
    (6, 6, 7, false),
    (7, 7, 8, false),
    (8, 3, 9, false),
    (9, 9, 10, false),
    (10, 10, 11, false),
    (11, 11, 12, false),
    (12, 5, 8, true),
    (13, 8, 12, true),
];
pub const TOY_CRITICAL: [(u32, f64); 8] = [(4, 40.0), (5, 30.0), (6, 20.0), (7, 50.0), (8, 25.0), (10, 35.0), (11, 15.0), (12, 45.0)];
pub const TOY_SCENARIOS: [(&[u32], f64); 2] = [(&[2, 6, 13], 0.6), (&[1, 9, 12], 0.4)];
pub const CANDIDATES: [u32; 5] = [4, 7, 8, 10, 12];

pub fn critical(node: u32) -> f64 {
    TOY_CRITICAL.iter().find(|(n, _)| *n == node).map_or(0.0, |(_, c)| *c)
}

pub fn toy() -> (Network, ReducedScenarioSet) {
    let loads = (1..=12).map(|n| NodeLoad::new(n, 100.0, critical(n))).collect();
    let branches = TOY_BRANCHES
        .iter()
        .map(|&(id, a, b, tie)| Branch::new(id, a, b, tie))
        .collect();
    let net = Network::new(loads, branches, 1).unwrap();
    let reduced = ReducedScenarioSet {
        scenarios: TOY_SCENARIOS
            .iter()
            .enumerate()
            .map(|(i, (out, p))| (OutageScenario::new(i, out.iter().copied()), *p))
            .collect(),
        k: 2,
        population: 2,
        inertia: 0.0,
    };
    (net, reduced)
}

/// Curtailment for one scenario: components of the surviving graph by BFS,
/// the source component is grid-fed, any other component is served up to
/// `unit` per MER inside it.
pub fn oracle_lc(out: &[u32], mers: &[u32], unit: f64) -> f64 {
    let mut adj = vec![Vec::new(); 13];
    for &(id, a, b, _) in &TOY_BRANCHES {
        if !out.contains(&id) {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
    }
    let mut seen = [false; 13];
    let mut total = 0.0;
    for start in 1..=12usize {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = q.pop_front() {
            comp.push(u as u32);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        if comp.contains(&1) {
            continue;
        }
        let load: f64 = comp.iter().map(|&n| critical(n)).sum();
        let capacity = unit * mers.iter().filter(|m| comp.contains(m)).count() as f64;
        total += (load - capacity).max(0.0);
    }
    total
}

pub fn oracle_min(unit: f64) -> (f64, Vec<u32>) {
    let mut best = (f64::INFINITY, Vec::new());
    for i in 0..CANDIDATES.len() {
        for j in i + 1..CANDIDATES.len() {
            let mers = [CANDIDATES[i], CANDIDATES[j]];
            let elc: f64 = TOY_SCENARIOS
                .iter()
                .map(|(out, p)| p * oracle_lc(out, &mers, unit))
                .sum();
            if elc < best.0 - 1e-12 {
                best = (elc, mers.to_vec());
            }
        }
    }
    best
}

/// Random connected graph with at most 8 nodes and 12 branches: a random
/// tree of normally-closed branches plus ties, random weights and outages.
pub struct RandomGraph {
    pub network: Network,
    pub edges: Vec<(u32, u32)>,
    pub outaged: BTreeSet<u32>,
}

pub fn random_graph<R: Rng>(rng: &mut R) -> RandomGraph {
    let n: u32 = rng.gen_range(2..=8);
    let mut edges: Vec<(u32, u32, bool)> = (2..=n).map(|i| (rng.gen_range(1..i), i, false)).collect();
    let extra = rng.gen_range(0..=(12 - edges.len()).min(6));
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
        if a != b {
            edges.push((a, b, true));
        }
    }
    let branches = edges
        .iter()
        .enumerate()
        .map(|(i, &(a, b, tie))| {
            let mut br = Branch::new(i as u32 + 1, a, b, tie);
            br.weight = f64::from(rng.gen_range(0u8..3));
            br
        })
        .collect();
    let loads = (1..=n).map(|i| NodeLoad::new(i, 1.0, 0.0)).collect();
    let network = Network::new(loads, branches, 1).unwrap();
    let outaged = (1..=edges.len() as u32).filter(|_| rng.gen_bool(0.4)).collect();
    RandomGraph {
        network,
        edges: edges.into_iter().map(|(a, b, _)| (a, b)).collect(),
        outaged,
    }
}

/// Connected components of the surviving edges by breadth-first search,
/// each sorted, in sorted order.
pub fn bfs_partition(n: usize, edges: &[(u32, u32)], outaged: &BTreeSet<u32>) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n + 1];
    for (i, &(a, b)) in edges.iter().enumerate() {
        if !outaged.contains(&(i as u32 + 1)) {
            adj[a as usize].push(b as usize);
            adj[b as usize].push(a as usize);
        }
    }
    let mut seen = vec![false; n + 1];
    let mut parts = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut part = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            part.push(u as u32);
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        part.sort();
        parts.push(part);
    }
    parts.sort();
    parts
}

/// Island partition (node ids) from a dense island labeling.
pub fn partition_of(network: &Network, island_of: &[usize], count: usize) -> Vec<Vec<u32>> {
    let mut parts = vec![Vec::new(); count];
    for (i, &isl) in island_of.iter().enumerate() {
        parts[isl].push(network.nodes()[i]);
    }
    parts.sort();
    parts
}
