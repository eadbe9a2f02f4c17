//! Spanning-forest reconfiguration checked against breadth-first component search.

use std::collections::{BTreeSet, VecDeque};

use mer_sizing::network::{connected_components, kruskal_spanning_forest, Branch, Network, NodeLoad};
use mer_sizing::union_find::UnionFind;
use proptest::prelude::*;

/// Random connected feeder: a random spanning tree of normally-closed
/// branches plus extra tie branches, with random weights.
#[derive(Debug, Clone)]
struct Case {
    n: u32,
    branches: Vec<(u32, u32, bool, u8)>,
    outaged: BTreeSet<u32>,
}

fn case() -> impl Strategy<Value = Case> {
    (2u32..=8)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (2..=n).map(|i| 1..i).collect();
            let extra = prop::collection::vec((1..=n, 1..=n), 0..=(12 - (n as usize - 1)).min(5));
            let weights = prop::collection::vec(0u8..3, 12);
            (Just(n), parents, extra, weights, prop::collection::vec(any::<bool>(), 12))
        })
        .prop_map(|(n, parents, extra, weights, outs)| {
            let mut branches = Vec::new();
            for (i, p) in parents.into_iter().enumerate() {
                branches.push((p, i as u32 + 2, false, weights[branches.len()]));
            }
            for (a, b) in extra.into_iter().filter(|(a, b)| a != b) {
                branches.push((a, b, true, weights[branches.len()]));
            }
            let outaged = (0..branches.len())
                .filter(|&i| outs[i])
                .map(|i| i as u32 + 1)
                .collect();
            Case { n, branches, outaged }
        })
}

fn build(case: &Case) -> Network {
    let loads = (1..=case.n).map(|i| NodeLoad::new(i, 1.0, 0.0)).collect();
    let branches = case
        .branches
        .iter()
        .enumerate()
        .map(|(i, &(a, b, tie, w))| {
            let mut br = Branch::new(i as u32 + 1, a, b, tie);
            br.weight = f64::from(w);
            br
        })
        .collect();
    Network::new(loads, branches, 1).unwrap()
}

/// Breadth-first partition of nodes 1..=n over the surviving branches, as
/// sorted node lists, sorted.
fn bfs_partition(case: &Case) -> Vec<Vec<u32>> {
    let n = case.n as usize;
    let mut adj = vec![Vec::new(); n + 1];
    for (i, &(a, b, _, _)) in case.branches.iter().enumerate() {
        if !case.outaged.contains(&(i as u32 + 1)) {
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

fn partition_of(island_of: &[usize], count: usize) -> Vec<Vec<u32>> {
    let mut parts = vec![Vec::new(); count];
    for (i, &isl) in island_of.iter().enumerate() {
        parts[isl].push(i as u32 + 1);
    }
    parts.sort();
    parts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forest_matches_bfs_components(case in case()) {
        let net = build(&case);
        let r = kruskal_spanning_forest(&net, &case.outaged);
        prop_assert_eq!(partition_of(&r.island_of, r.island_count), bfs_partition(&case));

        let available: BTreeSet<u32> = net.branch_ids().filter(|b| !case.outaged.contains(b)).collect();
        let comp = connected_components(&net, &available);
        prop_assert_eq!(&comp.island_of, &r.island_of);
        prop_assert_eq!(comp.island_of[0], 0);
    }

    #[test]
    fn forest_invariants(case in case()) {
        let net = build(&case);
        let r = kruskal_spanning_forest(&net, &case.outaged);

        prop_assert_eq!(r.closed_branches.len() + r.island_count, net.node_count());
        prop_assert!(r.closed_branches.is_disjoint(&case.outaged));

        let mut uf = UnionFind::new(net.node_count());
        for id in &r.closed_branches {
            let b = net.branch(*id).unwrap();
            prop_assert!(uf.union(b.from_node as usize - 1, b.to_node as usize - 1), "cycle at {}", id);
        }
        for b in net.branches() {
            if !case.outaged.contains(&b.id) && !r.closed_branches.contains(&b.id) {
                prop_assert!(uf.same(b.from_node as usize - 1, b.to_node as usize - 1));
            }
        }
        prop_assert_eq!(&kruskal_spanning_forest(&net, &case.outaged), &r);
    }

    #[test]
    fn forest_has_minimum_weight(case in case()) {
        // Exhaustive search over closed-branch subsets of maximal spanning forests.
        let net = build(&case);
        let r = kruskal_spanning_forest(&net, &case.outaged);
        let weight = |ids: &BTreeSet<u32>| ids.iter().map(|id| net.branch(*id).unwrap().weight).sum::<f64>();
        let avail: Vec<&Branch> = net.branches().iter().filter(|b| !case.outaged.contains(&b.id)).collect();
        let target = net.node_count() - r.island_count;
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << avail.len()) {
            if mask.count_ones() as usize != target {
                continue;
            }
            let mut uf = UnionFind::new(net.node_count());
            let acyclic = avail.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).all(|(_, b)| {
                uf.union(b.from_node as usize - 1, b.to_node as usize - 1)
            });
            if acyclic {
                let w: f64 = avail.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, b)| b.weight).sum();
                best = best.min(w);
            }
        }
        prop_assert_eq!(weight(&r.closed_branches), best);
    }
}
