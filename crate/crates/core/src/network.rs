//! Undirected feeder graph and spanning-forest reconfiguration.
//!
//! Nodes and branches keep the 1-based ids of the input files. Internally
//! every node also has a dense index (its position in ascending id order),
//! which is what island labelings are keyed by.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::union_find::UnionFind;

pub type NodeId = u32;
pub type BranchId = u32;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("network has no nodes")]
    Empty,
    #[error("duplicate branch id {0}")]
    DuplicateBranchId(BranchId),
    #[error("duplicate load record for node {0}")]
    DuplicateNode(NodeId),
    #[error("branch {branch} references unknown node {node}")]
    UnknownNode { branch: BranchId, node: NodeId },
    #[error("branch {0} connects a node to itself")]
    SelfLoop(BranchId),
    #[error("branch {branch} has invalid weight {weight}")]
    InvalidWeight { branch: BranchId, weight: f64 },
    #[error("branch {branch} has tie flag {value}, expected 0 or 1")]
    InvalidTieFlag { branch: BranchId, value: u8 },
    #[error("node {node}: {reason}")]
    InvalidLoad { node: NodeId, reason: String },
    #[error("no source node declared")]
    MissingSource,
    #[error("more than one source node declared: {0:?}")]
    MultipleSources(Vec<NodeId>),
    #[error("source node {0} is not a network node")]
    UnknownSource(NodeId),
    #[error("graph with every branch closed is disconnected ({islands} components)")]
    DisconnectedBaseGraph { islands: usize },
    #[error("normally-closed branches do not form a spanning tree: {0}")]
    NonRadialClosedSet(String),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub id: BranchId,
    pub from_node: NodeId,
    pub to_node: NodeId,
    /// Normally-open tie line.
    pub is_tie: bool,
    pub weight: f64,
}

impl Branch {
    /// Branch with the default reconfiguration weight: 0 for normally-closed
    /// sections, 1 for ties, so Kruskal closes as few ties as possible.
    pub fn new(id: BranchId, from_node: NodeId, to_node: NodeId, is_tie: bool) -> Self {
        Self {
            id,
            from_node,
            to_node,
            is_tie,
            weight: if is_tie { 1.0 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeLoad {
    pub node: NodeId,
    pub total_kw: f64,
    pub critical_kw: f64,
    /// Critical load factor. Defaults to 1 for nodes carrying critical load and 0 otherwise.
    pub critical_weight: f64,
}

impl NodeLoad {
    pub fn new(node: NodeId, total_kw: f64, critical_kw: f64) -> Self {
        Self {
            node,
            total_kw,
            critical_kw,
            critical_weight: if critical_kw > 0.0 { 1.0 } else { 0.0 },
        }
    }

    /// Weighted critical demand that counts toward curtailment.
    pub fn weighted_critical_kw(&self) -> f64 {
        self.critical_weight * self.critical_kw
    }
}

/// Immutable distribution network.
#[derive(Debug, Clone)]
pub struct Network {
    nodes: Vec<NodeId>,
    node_index: HashMap<NodeId, usize>,
    loads: Vec<NodeLoad>,
    branches: Vec<Branch>,
    branch_index: HashMap<BranchId, usize>,
    ends: Vec<(usize, usize)>,
    source: NodeId,
    /// Branch positions sorted by (weight, id).
    kruskal_order: Vec<usize>,
}

impl Network {
    pub fn new(
        loads: Vec<NodeLoad>,
        branches: Vec<Branch>,
        source: NodeId,
    ) -> Result<Self, NetworkError> {
        if loads.is_empty() {
            return Err(NetworkError::Empty);
        }
        let mut loads = loads;
        loads.sort_by_key(|l| l.node);
        for pair in loads.windows(2) {
            if pair[0].node == pair[1].node {
                return Err(NetworkError::DuplicateNode(pair[0].node));
            }
        }
        for l in &loads {
            validate_load(l)?;
        }
        let nodes: Vec<NodeId> = loads.iter().map(|l| l.node).collect();
        let node_index: HashMap<NodeId, usize> =
            nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        if !node_index.contains_key(&source) {
            return Err(NetworkError::UnknownSource(source));
        }

        let mut branches = branches;
        branches.sort_by_key(|b| b.id);
        for pair in branches.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(NetworkError::DuplicateBranchId(pair[0].id));
            }
        }
        let mut ends = Vec::with_capacity(branches.len());
        for b in &branches {
            if b.from_node == b.to_node {
                return Err(NetworkError::SelfLoop(b.id));
            }
            if !(b.weight.is_finite() && b.weight >= 0.0) {
                return Err(NetworkError::InvalidWeight {
                    branch: b.id,
                    weight: b.weight,
                });
            }
            let lookup = |node| {
                node_index
                    .get(&node)
                    .copied()
                    .ok_or(NetworkError::UnknownNode { branch: b.id, node })
            };
            ends.push((lookup(b.from_node)?, lookup(b.to_node)?));
        }

        let mut all = UnionFind::new(nodes.len());
        for &(a, b) in &ends {
            all.union(a, b);
        }
        if all.set_count() != 1 {
            return Err(NetworkError::DisconnectedBaseGraph {
                islands: all.set_count(),
            });
        }

        let normally_closed = branches.iter().filter(|b| !b.is_tie).count();
        if normally_closed + 1 != nodes.len() {
            return Err(NetworkError::NonRadialClosedSet(format!(
                "{normally_closed} normally-closed branches for {} nodes",
                nodes.len()
            )));
        }
        let mut tree = UnionFind::new(nodes.len());
        for (b, &(x, y)) in branches.iter().zip(&ends) {
            if !b.is_tie && !tree.union(x, y) {
                return Err(NetworkError::NonRadialClosedSet(format!(
                    "branch {} closes a loop",
                    b.id
                )));
            }
        }

        let branch_index = branches.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let mut kruskal_order: Vec<usize> = (0..branches.len()).collect();
        kruskal_order.sort_by(|&a, &b| {
            branches[a]
                .weight
                .total_cmp(&branches[b].weight)
                .then(branches[a].id.cmp(&branches[b].id))
        });

        Ok(Self {
            nodes,
            node_index,
            loads,
            branches,
            branch_index,
            ends,
            source,
            kruskal_order,
        })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, node: NodeId) -> Option<usize> {
        self.node_index.get(&node).copied()
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.node_index.contains_key(&node)
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, id: BranchId) -> Option<&Branch> {
        self.branch_index.get(&id).map(|&i| &self.branches[i])
    }

    pub fn branch_ids(&self) -> impl Iterator<Item = BranchId> + '_ {
        self.branches.iter().map(|b| b.id)
    }

    pub fn source_node(&self) -> NodeId {
        self.source
    }

    pub fn source_index(&self) -> usize {
        self.node_index[&self.source]
    }

    /// Loads in ascending node order, aligned with [`Network::nodes`].
    pub fn loads(&self) -> &[NodeLoad] {
        &self.loads
    }

    pub fn load(&self, node: NodeId) -> Option<&NodeLoad> {
        self.node_index(node).map(|i| &self.loads[i])
    }

    pub fn total_load_kw(&self) -> f64 {
        self.loads.iter().map(|l| l.total_kw).sum()
    }

    pub fn total_critical_kw(&self) -> f64 {
        self.loads.iter().map(NodeLoad::weighted_critical_kw).sum()
    }

    pub fn critical_nodes(&self) -> Vec<NodeId> {
        self.loads
            .iter()
            .filter(|l| l.critical_kw > 0.0)
            .map(|l| l.node)
            .collect()
    }

    pub(crate) fn branch_ends(&self, position: usize) -> (usize, usize) {
        self.ends[position]
    }
}

fn validate_load(l: &NodeLoad) -> Result<(), NetworkError> {
    let bad = |reason: &str| {
        Err(NetworkError::InvalidLoad {
            node: l.node,
            reason: reason.to_string(),
        })
    };
    if !(l.total_kw.is_finite() && l.total_kw >= 0.0) {
        return bad("total load must be finite and nonnegative");
    }
    if !(l.critical_kw.is_finite() && l.critical_kw >= 0.0) {
        return bad("critical load must be finite and nonnegative");
    }
    if l.critical_kw > l.total_kw {
        return bad("critical load exceeds total load");
    }
    if !(0.0..=1.0).contains(&l.critical_weight) {
        return bad("critical weight outside [0, 1]");
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct BranchRecord {
    id: BranchId,
    from: NodeId,
    to: NodeId,
    tie: u8,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct LoadRecord {
    node: NodeId,
    load_kw: f64,
    critical_kw: f64,
    #[serde(default)]
    critical_weight: Option<f64>,
    #[serde(default)]
    source: Option<u8>,
}

/// Builds a network from a branches table (`id,from,to,tie[,weight]`) and a
/// loads table (`node,load_kw,critical_kw[,critical_weight][,source]`).
///
/// When no `source` column is present the lowest node id is the substation.
pub fn load_network<B: Read, L: Read>(branches: B, loads: L) -> Result<Network, NetworkError> {
    let mut branch_list = Vec::new();
    for rec in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(branches)
        .deserialize()
    {
        let rec: BranchRecord = rec?;
        let is_tie = match rec.tie {
            0 => false,
            1 => true,
            value => return Err(NetworkError::InvalidTieFlag { branch: rec.id, value }),
        };
        let mut b = Branch::new(rec.id, rec.from, rec.to, is_tie);
        if let Some(w) = rec.weight {
            b.weight = w;
        }
        branch_list.push(b);
    }

    let mut load_list = Vec::new();
    let mut declared = Vec::new();
    let mut has_source_column = false;
    for rec in csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(loads)
        .deserialize()
    {
        let rec: LoadRecord = rec?;
        let mut l = NodeLoad::new(rec.node, rec.load_kw, rec.critical_kw);
        if let Some(w) = rec.critical_weight {
            l.critical_weight = w;
        }
        if let Some(flag) = rec.source {
            has_source_column = true;
            if flag != 0 {
                declared.push(rec.node);
            }
        }
        load_list.push(l);
    }

    let source = match declared.as_slice() {
        [one] => *one,
        [] if has_source_column => return Err(NetworkError::MissingSource),
        [] => load_list
            .iter()
            .map(|l| l.node)
            .min()
            .ok_or(NetworkError::Empty)?,
        many => return Err(NetworkError::MultipleSources(many.to_vec())),
    };
    Network::new(load_list, branch_list, source)
}

pub fn load_network_files(branches: &Path, loads: &Path) -> Result<Network, NetworkError> {
    let open = |p: &Path| {
        std::fs::File::open(p).map_err(|source| NetworkError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    load_network(open(branches)?, open(loads)?)
}

/// Island labeling of the nodes, keyed by dense node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub island_of: Vec<usize>,
    pub island_count: usize,
}

/// Relabels union-find roots densely: the source island is 0, the rest are
/// numbered by their lowest node id.
fn label_islands(network: &Network, uf: &mut UnionFind) -> Components {
    let n = network.node_count();
    let mut label = vec![usize::MAX; n];
    let mut island_of = vec![0; n];
    let src_root = uf.find(network.source_index());
    label[src_root] = 0;
    let mut next = 1;
    for (i, slot) in island_of.iter_mut().enumerate() {
        let r = uf.find(i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        *slot = label[r];
    }
    Components {
        island_of,
        island_count: next,
    }
}

/// Connected components of the graph restricted to `available` branches.
/// Ids that are not branches of the network are ignored.
pub fn connected_components(network: &Network, available: &BTreeSet<BranchId>) -> Components {
    let mut uf = UnionFind::new(network.node_count());
    for id in available {
        if let Some(&pos) = network.branch_index.get(id) {
            let (a, b) = network.ends[pos];
            uf.union(a, b);
        }
    }
    label_islands(network, &mut uf)
}

/// Spanning forest of one outage scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconfiguration {
    pub scenario_id: usize,
    pub closed_branches: BTreeSet<BranchId>,
    /// Island index per dense node index. Island 0 holds the source node.
    pub island_of: Vec<usize>,
    pub island_count: usize,
    /// False when the substation infeed itself is lost, in which case island 0
    /// has to be served like any other island.
    pub grid_energized: bool,
}

impl Reconfiguration {
    pub fn island_of_node(&self, network: &Network, node: NodeId) -> Option<usize> {
        network.node_index(node).map(|i| self.island_of[i])
    }

    /// Node ids of every island, ascending within each island.
    pub fn islands(&self, network: &Network) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.island_count];
        for (i, &isl) in self.island_of.iter().enumerate() {
            out[isl].push(network.nodes()[i]);
        }
        out
    }

    pub fn closed_ties(&self, network: &Network) -> Vec<BranchId> {
        self.closed_branches
            .iter()
            .copied()
            .filter(|&id| network.branch(id).is_some_and(|b| b.is_tie))
            .collect()
    }

    pub fn open_ties(&self, network: &Network) -> Vec<BranchId> {
        network
            .branches()
            .iter()
            .filter(|b| b.is_tie && !self.closed_branches.contains(&b.id))
            .map(|b| b.id)
            .collect()
    }
}

/// Greedy Kruskal over the branches that survived the outage, ordered by
/// (weight, id). Returns a maximal spanning forest; the grid is assumed
/// energized.
pub fn kruskal_spanning_forest(network: &Network, outaged: &BTreeSet<BranchId>) -> Reconfiguration {
    let mut uf = UnionFind::new(network.node_count());
    let mut closed = BTreeSet::new();
    for &pos in &network.kruskal_order {
        let b = &network.branches[pos];
        if outaged.contains(&b.id) {
            continue;
        }
        let (x, y) = network.branch_ends(pos);
        if uf.union(x, y) {
            closed.insert(b.id);
        }
    }
    let Components {
        island_of,
        island_count,
    } = label_islands(network, &mut uf);
    Reconfiguration {
        scenario_id: 0,
        closed_branches: closed,
        island_of,
        island_count,
        grid_energized: true,
    }
}
