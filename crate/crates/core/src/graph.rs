//! Snapshots, update sets and the diff between consecutive snapshots.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Edge weight. Input data carries integer retweet counts, which stay exact
/// in `f64` for every sum this crate forms.
pub type Weight = f64;

/// Dense node index, stable for the lifetime of a [`NodeTable`].
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Interns external node names. A node that leaves and later re-enters the
/// sequence keeps its index.
#[derive(Clone, Debug, Default)]
pub struct NodeTable {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn edge_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn check_weight(a: NodeId, b: NodeId, w: Weight) -> Result<()> {
    if a == b {
        return Err(Error::InvalidEdge(a.to_string(), b.to_string(), "self-loop"));
    }
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::InvalidEdge(
            a.to_string(),
            b.to_string(),
            "weight must be positive",
        ));
    }
    Ok(())
}

/// Undirected edge-weighted graph at one instant.
///
/// Adjacency is kept symmetric, self-loops are rejected and every stored
/// weight is strictly positive.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotGraph {
    t: usize,
    adjacency: BTreeMap<NodeId, BTreeMap<NodeId, Weight>>,
}

impl SnapshotGraph {
    pub fn new(t: usize) -> Self {
        Self {
            t,
            adjacency: BTreeMap::new(),
        }
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn set_t(&mut self, t: usize) {
        self.t = t;
    }

    pub fn add_node(&mut self, n: NodeId) {
        self.adjacency.entry(n).or_default();
    }

    /// Inserts or overwrites an edge, adding missing endpoints.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId, w: Weight) -> Result<()> {
        check_weight(a, b, w)?;
        self.adjacency.entry(a).or_default().insert(b, w);
        self.adjacency.entry(b).or_default().insert(a, w);
        Ok(())
    }

    pub(crate) fn remove_node(&mut self, n: NodeId) -> Vec<(NodeId, Weight)> {
        let incident: Vec<_> = self
            .adjacency
            .remove(&n)
            .map(|nbrs| nbrs.into_iter().collect())
            .unwrap_or_default();
        for &(j, _) in &incident {
            if let Some(nbrs) = self.adjacency.get_mut(&j) {
                nbrs.remove(&n);
            }
        }
        incident
    }

    pub(crate) fn remove_edge(&mut self, a: NodeId, b: NodeId) -> Option<Weight> {
        let w = self.adjacency.get_mut(&a)?.remove(&b)?;
        if let Some(nbrs) = self.adjacency.get_mut(&b) {
            nbrs.remove(&a);
        }
        Some(w)
    }

    pub fn contains_node(&self, n: NodeId) -> bool {
        self.adjacency.contains_key(&n)
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> Option<Weight> {
        self.adjacency.get(&a)?.get(&b).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbours of `n` with edge weights, in node order. Empty for an
    /// unknown node.
    pub fn neighbors(&self, n: NodeId) -> impl Iterator<Item = (NodeId, Weight)> + '_ {
        self.adjacency
            .get(&n)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&j, &w)| (j, w)))
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency.get(&n).map_or(0, BTreeMap::len)
    }

    /// Each undirected edge once, as `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, Weight)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, nbrs)| nbrs.iter().filter(move |(&b, _)| a < b).map(move |(&b, &w)| (a, b, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Total edge weight `M`, each undirected edge counted once.
    pub fn total_weight(&self) -> Weight {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Same nodes, edges and weights, ignoring the snapshot index.
    pub fn same_structure(&self, other: &SnapshotGraph) -> bool {
        self.adjacency == other.adjacency
    }

    /// Multiplies every weight by `factor` (must be positive).
    pub fn scaled(&self, factor: f64) -> SnapshotGraph {
        assert!(factor > 0.0 && factor.is_finite());
        let mut out = self.clone();
        for nbrs in out.adjacency.values_mut() {
            for w in nbrs.values_mut() {
                *w *= factor;
            }
        }
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum UpdateClass {
    NodeToRemove,
    EdgeToRemove,
    NodeToAdd,
    EdgeToAdd,
    EdgeWeightUpdate,
}

impl fmt::Display for UpdateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdateClass::NodeToRemove => "nodeToRemove",
            UpdateClass::EdgeToRemove => "edgeToRemove",
            UpdateClass::NodeToAdd => "nodeToAdd",
            UpdateClass::EdgeToAdd => "edgeToAdd",
            UpdateClass::EdgeWeightUpdate => "edgeWeightUpdate",
        })
    }
}

/// A node entering the graph together with its incident edges.
///
/// An edge may point at a node added later in the same set; it is attached
/// when that node arrives.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeAddition {
    pub node: NodeId,
    pub edges: Vec<(NodeId, Weight)>,
}

/// The five typed update lists turning one snapshot into the next.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateSet {
    pub node_to_remove: Vec<NodeId>,
    pub edge_to_remove: Vec<(NodeId, NodeId)>,
    pub node_to_add: Vec<NodeAddition>,
    pub edge_to_add: Vec<(NodeId, NodeId, Weight)>,
    pub edge_weight_update: Vec<(NodeId, NodeId, Weight)>,
}

impl UpdateSet {
    pub fn is_empty(&self) -> bool {
        self.node_to_remove.is_empty()
            && self.edge_to_remove.is_empty()
            && self.node_to_add.is_empty()
            && self.edge_to_add.is_empty()
            && self.edge_weight_update.is_empty()
    }

    pub fn len(&self) -> usize {
        self.node_to_remove.len()
            + self.edge_to_remove.len()
            + self.node_to_add.len()
            + self.edge_to_add.len()
            + self.edge_weight_update.len()
    }

    /// Checks the set against `g` without touching it.
    pub fn validate(&self, g: &SnapshotGraph) -> Result<()> {
        let bad = |class, entry: String, reason| Error::InconsistentUpdate { class, entry, reason };

        let mut removed_nodes = BTreeSet::new();
        for &n in &self.node_to_remove {
            if !g.contains_node(n) {
                return Err(bad(UpdateClass::NodeToRemove, n.to_string(), "node does not exist"));
            }
            if !removed_nodes.insert(n) {
                return Err(bad(UpdateClass::NodeToRemove, n.to_string(), "node removed twice"));
            }
        }

        let mut removed_edges = BTreeSet::new();
        let survives = |a: NodeId, b: NodeId, removed_edges: &BTreeSet<(NodeId, NodeId)>| {
            g.weight(a, b).is_some()
                && !removed_nodes.contains(&a)
                && !removed_nodes.contains(&b)
                && !removed_edges.contains(&edge_key(a, b))
        };
        for &(a, b) in &self.edge_to_remove {
            let entry = format!("({a}, {b})");
            if a == b {
                return Err(bad(UpdateClass::EdgeToRemove, entry, "self-loop"));
            }
            if !survives(a, b, &removed_edges) {
                return Err(bad(UpdateClass::EdgeToRemove, entry, "edge does not exist"));
            }
            removed_edges.insert(edge_key(a, b));
        }

        let mut added_nodes = BTreeSet::new();
        let mut pending: BTreeSet<NodeId> = self.node_to_add.iter().map(|a| a.node).collect();
        let mut added_edges = BTreeSet::new();
        for add in &self.node_to_add {
            let n = add.node;
            if (g.contains_node(n) && !removed_nodes.contains(&n)) || added_nodes.contains(&n) {
                return Err(bad(UpdateClass::NodeToAdd, n.to_string(), "node already exists"));
            }
            pending.remove(&n);
            for &(j, w) in &add.edges {
                let entry = format!("{n}: ({n}, {j}, {w})");
                if check_weight(n, j, w).is_err() {
                    return Err(bad(UpdateClass::NodeToAdd, entry, "invalid incident edge"));
                }
                let present = (g.contains_node(j) && !removed_nodes.contains(&j)) || added_nodes.contains(&j);
                if !present && !pending.contains(&j) {
                    return Err(bad(
                        UpdateClass::NodeToAdd,
                        entry,
                        "incident edge endpoint does not exist",
                    ));
                }
                if !added_edges.insert(edge_key(n, j)) {
                    return Err(bad(UpdateClass::NodeToAdd, entry, "edge listed twice"));
                }
            }
            added_nodes.insert(n);
        }

        let present = |n: NodeId| (g.contains_node(n) && !removed_nodes.contains(&n)) || added_nodes.contains(&n);
        for &(a, b, w) in &self.edge_to_add {
            let entry = format!("({a}, {b}, {w})");
            if check_weight(a, b, w).is_err() {
                return Err(bad(UpdateClass::EdgeToAdd, entry, "self-loop or non-positive weight"));
            }
            if !present(a) || !present(b) {
                return Err(bad(UpdateClass::EdgeToAdd, entry, "endpoint does not exist"));
            }
            if survives(a, b, &removed_edges) || !added_edges.insert(edge_key(a, b)) {
                return Err(bad(UpdateClass::EdgeToAdd, entry, "edge already exists"));
            }
        }

        let mut updated = BTreeSet::new();
        for &(a, b, w) in &self.edge_weight_update {
            let entry = format!("({a}, {b}, {w})");
            if check_weight(a, b, w).is_err() {
                return Err(bad(
                    UpdateClass::EdgeWeightUpdate,
                    entry,
                    "self-loop or non-positive weight",
                ));
            }
            if added_edges.contains(&edge_key(a, b)) {
                return Err(bad(
                    UpdateClass::EdgeWeightUpdate,
                    entry,
                    "edge was added in the same set",
                ));
            }
            if !survives(a, b, &removed_edges) {
                return Err(bad(UpdateClass::EdgeWeightUpdate, entry, "edge does not exist"));
            }
            if !updated.insert(edge_key(a, b)) {
                return Err(bad(UpdateClass::EdgeWeightUpdate, entry, "edge updated twice"));
            }
        }
        Ok(())
    }
}

/// One elementary change, reported after it has been applied to the graph.
#[derive(Clone, Debug)]
pub(crate) enum Applied {
    NodeRemoved {
        node: NodeId,
        edges: Vec<(NodeId, Weight)>,
    },
    EdgeRemoved {
        a: NodeId,
        b: NodeId,
        weight: Weight,
    },
    NodeAdded {
        node: NodeId,
    },
    EdgeAdded {
        a: NodeId,
        b: NodeId,
        weight: Weight,
    },
    WeightUpdated {
        a: NodeId,
        b: NodeId,
        old: Weight,
        new: Weight,
    },
}

/// Applies a validated set in place, in removal / addition / update order,
/// calling `visit` with the graph state right after each change.
pub(crate) fn apply_validated(g: &mut SnapshotGraph, u: &UpdateSet, mut visit: impl FnMut(&SnapshotGraph, Applied)) {
    for &node in &u.node_to_remove {
        let edges = g.remove_node(node);
        visit(g, Applied::NodeRemoved { node, edges });
    }
    for &(a, b) in &u.edge_to_remove {
        let weight = g.remove_edge(a, b).expect("validated edge removal");
        visit(g, Applied::EdgeRemoved { a, b, weight });
    }

    let mut deferred: BTreeMap<NodeId, Vec<(NodeId, Weight)>> = BTreeMap::new();
    for add in &u.node_to_add {
        g.add_node(add.node);
        for &(j, w) in &add.edges {
            if g.contains_node(j) {
                g.add_edge(add.node, j, w).expect("validated edge");
            } else {
                deferred.entry(j).or_default().push((add.node, w));
            }
        }
        for (j, w) in deferred.remove(&add.node).unwrap_or_default() {
            g.add_edge(add.node, j, w).expect("validated edge");
        }
        visit(g, Applied::NodeAdded { node: add.node });
    }

    for &(a, b, weight) in &u.edge_to_add {
        g.add_edge(a, b, weight).expect("validated edge");
        visit(g, Applied::EdgeAdded { a, b, weight });
    }
    for &(a, b, new) in &u.edge_weight_update {
        let old = g.weight(a, b).expect("validated weight update");
        g.add_edge(a, b, new).expect("validated edge");
        visit(g, Applied::WeightUpdated { a, b, old, new });
    }
}

/// Returns `G_{t+1}`: removals first, then additions, then weight updates.
pub fn apply_updates(g: &SnapshotGraph, u: &UpdateSet) -> Result<SnapshotGraph> {
    u.validate(g)?;
    let mut next = g.clone();
    apply_validated(&mut next, u, |_, _| {});
    next.t = g.t + 1;
    Ok(next)
}

/// The minimal update set carrying `prev` onto `next`.
///
/// Edges touching a removed node are implied by the node removal. Edges
/// touching a new node travel with the node addition of whichever endpoint
/// comes later in node order.
pub fn diff_snapshots(prev: &SnapshotGraph, next: &SnapshotGraph) -> UpdateSet {
    let mut u = UpdateSet::default();

    for n in prev.nodes() {
        if !next.contains_node(n) {
            u.node_to_remove.push(n);
        }
    }

    let is_new = |n: NodeId| !prev.contains_node(n);
    for n in next.nodes().filter(|&n| is_new(n)) {
        let edges = next.neighbors(n).filter(|&(j, _)| !is_new(j) || j < n).collect();
        u.node_to_add.push(NodeAddition { node: n, edges });
    }

    for (a, b, w) in prev.edges() {
        if !next.contains_node(a) || !next.contains_node(b) {
            continue;
        }
        match next.weight(a, b) {
            None => u.edge_to_remove.push((a, b)),
            Some(nw) if nw != w => u.edge_weight_update.push((a, b, nw)),
            Some(_) => {}
        }
    }
    for (a, b, w) in next.edges() {
        if !is_new(a) && !is_new(b) && prev.weight(a, b).is_none() {
            u.edge_to_add.push((a, b, w));
        }
    }
    u
}
