//! Incremental community maintenance.
//!
//! The first snapshot is partitioned by [`seed_partition`]: greedy triangle
//! seeds followed by pairwise merges. Every later snapshot is reached by
//! feeding the update set through five handlers, one per update class, each
//! of which only revisits the communities the update touches.
//!
//! Two merge tests drive everything:
//!
//! * component test, for a weakened piece `cc` of a community and an
//!   adjacent community `com`: `INW(com, cc) >= IW(cc)`;
//! * pair test, for adjacent communities `a` and `b`:
//!   `INW(a, b) >= IW(a) || INW(a, b) >= IW(b)`.
//!
//! Both are inclusive. Whenever several neighbours qualify, the one with the
//! largest INW wins, then the larger IW, then the smaller id.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{apply_validated, Applied, NodeId, SnapshotGraph, UpdateSet, Weight};
use crate::partition::{CommunityId, Partition};

/// Sum of the weights incident to `n`.
pub fn weighted_degree(g: &SnapshotGraph, n: NodeId) -> Result<Weight> {
    if !g.contains_node(n) {
        return Err(Error::UnknownNode(n.to_string()));
    }
    Ok(g.neighbors(n).map(|(_, w)| w).sum())
}

/// Fraction of `n`'s weighted degree that falls inside community `c`.
pub fn weighted_incidence(g: &SnapshotGraph, p: &Partition, n: NodeId, c: CommunityId) -> Result<f64> {
    let members = p.members(c).ok_or_else(|| Error::UnknownCommunity(c.to_string()))?;
    let degree = weighted_degree(g, n)?;
    if degree <= 0.0 {
        return Err(Error::ZeroDegree(n.to_string()));
    }
    let inside: Weight = g
        .neighbors(n)
        .filter(|(j, _)| members.contains(j))
        .map(|(_, w)| w)
        .sum();
    Ok(inside / degree)
}

fn pair_test(inw: Weight, iw_a: Weight, iw_b: Weight) -> bool {
    inw > 0.0 && (inw >= iw_a || inw >= iw_b)
}

/// Neighbours of `c` ranked by INW desc, IW desc, id asc.
fn ranked_neighbors(g: &SnapshotGraph, p: &Partition, c: CommunityId) -> Vec<(CommunityId, Weight)> {
    let mut ranked: Vec<_> = p.neighbor_weights(g, c).into_iter().collect();
    ranked.sort_by(|&(a, wa), &(b, wb)| {
        wb.partial_cmp(&wa)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                p.intra_weight(b)
                    .partial_cmp(&p.intra_weight(a))
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| a.cmp(&b))
    });
    ranked
}

/// Merges `c` with its best pair-test partner until none qualifies.
/// Returns the id of the resulting community.
fn cascade(g: &SnapshotGraph, p: &mut Partition, mut c: CommunityId) -> CommunityId {
    loop {
        let iw = p.intra_weight(c);
        let partner = ranked_neighbors(g, p, c)
            .into_iter()
            .find(|&(d, inw)| pair_test(inw, iw, p.intra_weight(d)));
        match partner {
            Some((d, _)) => c = p.merge(g, c, d),
            None => return c,
        }
    }
}

/// Component test for community `cc`: absorbed into the dominant neighbour
/// if one exists, followed by a pair-test cascade.
fn absorb_if_dominated(g: &SnapshotGraph, p: &mut Partition, cc: CommunityId) {
    let iw = p.intra_weight(cc);
    let dominator = ranked_neighbors(g, p, cc).into_iter().find(|&(_, inw)| inw >= iw);
    if let Some((com, _)) = dominator {
        let merged = p.merge(g, cc, com);
        cascade(g, p, merged);
    }
}

/// Splits `c` into the connected components of its induced subgraph and
/// runs the component test on each. The heaviest component keeps `c`.
fn split_and_test(g: &SnapshotGraph, p: &mut Partition, c: CommunityId) {
    let comps = p.components(g, c);
    if comps.is_empty() {
        return;
    }
    let internal = |comp: &BTreeSet<NodeId>| -> Weight {
        comp.iter()
            .flat_map(|&i| g.neighbors(i).filter(move |&(j, _)| i < j))
            .filter(|(j, _)| comp.contains(j))
            .map(|(_, w)| w)
            .sum()
    };
    // Components are in order of smallest node, so ties go to the earliest.
    let keeper = comps
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, comp)| {
            let w = internal(comp);
            if w > best.1 {
                (i, w)
            } else {
                best
            }
        })
        .0;

    let mut assigned = Vec::with_capacity(comps.len());
    if comps.len() > 1 {
        p.detach(g, c);
        for (i, comp) in comps.into_iter().enumerate() {
            let id = if i == keeper { c } else { p.fresh_id() };
            let size = comp.len();
            p.attach(g, id, comp);
            assigned.push((id, size));
        }
    } else {
        assigned.push((c, comps[0].len()));
    }

    for (id, size) in assigned {
        // A component already swallowed or grown by an earlier cascade is
        // no longer the component we split off.
        if p.members(id).map(BTreeSet::len) == Some(size) {
            absorb_if_dominated(g, p, id);
        }
    }
}

/// Static partition of the first snapshot.
///
/// Triangles are taken greedily by decreasing total weight (ties by node
/// order); a triangle becomes a seed only if none of its nodes is covered
/// yet. Leftover nodes start as singletons. Adjacent communities are then
/// merged under the pair test, weakest community first, until no pair
/// qualifies.
pub fn seed_partition(g0: &SnapshotGraph) -> Partition {
    let mut triangles: Vec<(Weight, [NodeId; 3])> = Vec::new();
    for (a, b, wab) in g0.edges() {
        for (c, wbc) in g0.neighbors(b).filter(|&(c, _)| c > b) {
            if let Some(wac) = g0.weight(a, c) {
                triangles.push((wab + wbc + wac, [a, b, c]));
            }
        }
    }
    triangles.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.1.cmp(&y.1))
    });

    let mut label = std::collections::BTreeMap::new();
    let mut next = 0u32;
    for (_, tri) in &triangles {
        if tri.iter().all(|v| !label.contains_key(v)) {
            for &v in tri {
                label.insert(v, CommunityId(next));
            }
            next += 1;
        }
    }
    for v in g0.nodes() {
        label.entry(v).or_insert_with(|| {
            next += 1;
            CommunityId(next - 1)
        });
    }
    let mut p = Partition::from_assignment(g0, label).expect("every node labelled");

    // Weakest community first, so small pieces settle into their own block
    // before a growing community can reach across into the next one.
    let key = |p: &Partition, c: CommunityId| (p.intra_weight(c).to_bits(), c);
    let mut pending: BTreeSet<(u64, CommunityId)> = p.communities().map(|(c, _)| key(&p, c)).collect();
    while let Some((_, c)) = pending.pop_first() {
        let iw = p.intra_weight(c);
        let partner = ranked_neighbors(g0, &p, c)
            .into_iter()
            .find(|&(d, inw)| pair_test(inw, iw, p.intra_weight(d)));
        let Some((d, _)) = partner else { continue };
        pending.remove(&key(&p, d));
        let merged = p.merge(g0, c, d);
        pending.insert(key(&p, merged));
        // Neighbours now face a heavier INW and may qualify again.
        for (e, _) in p.neighbor_weights(g0, merged) {
            pending.insert(key(&p, e));
        }
    }
    p
}

/// Handles the removal of `old_node`, whose incident `edges` are already
/// gone from `g_after`.
pub fn node_removing(g_after: &SnapshotGraph, p: &mut Partition, old_node: NodeId, edges: &[(NodeId, Weight)]) {
    let Some(c_old) = p.remove_node(old_node, edges) else {
        return;
    };
    if p.members(c_old).is_some() {
        split_and_test(g_after, p, c_old);
    }
}

/// Handles the removal of edge `(a, b)` that carried `old_weight`.
pub fn edge_removing(g_after: &SnapshotGraph, p: &mut Partition, (a, b): (NodeId, NodeId), old_weight: Weight) {
    let (Some(ca), Some(cb)) = (p.community_of(a), p.community_of(b)) else {
        return;
    };
    if ca != cb {
        p.add_inter(ca, cb, -old_weight);
        return;
    }
    p.add_intra(ca, -old_weight);
    split_and_test(g_after, p, ca);
}

/// Handles the arrival of `new_node`, already present in `g_after` with its
/// incident edges.
pub fn node_addition(g_after: &SnapshotGraph, p: &mut Partition, new_node: NodeId) {
    let mut toward: std::collections::BTreeMap<CommunityId, Weight> = std::collections::BTreeMap::new();
    for (j, w) in g_after.neighbors(new_node) {
        if let Some(cj) = p.community_of(j) {
            *toward.entry(cj).or_insert(0.0) += w;
        }
    }
    // Largest WI is largest weight into the community: the degree is shared.
    let best = toward.into_iter().max_by(|&(a, wa), &(b, wb)| {
        wa.partial_cmp(&wb)
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                p.intra_weight(a)
                    .partial_cmp(&p.intra_weight(b))
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| b.cmp(&a))
    });
    match best {
        None => {
            let id = p.fresh_id();
            p.insert_node(g_after, new_node, id);
        }
        Some((c, _)) => {
            p.insert_node(g_after, new_node, c);
            cascade(g_after, p, c);
        }
    }
}

/// Handles the insertion of edge `(a, b)` with `weight`.
pub fn edge_addition(g_after: &SnapshotGraph, p: &mut Partition, (a, b, weight): (NodeId, NodeId, Weight)) {
    let (Some(ca), Some(cb)) = (p.community_of(a), p.community_of(b)) else {
        return;
    };
    if ca == cb {
        p.add_intra(ca, weight);
        return;
    }
    p.add_inter(ca, cb, weight);
    if pair_test(p.inter_weight(ca, cb), p.intra_weight(ca), p.intra_weight(cb)) {
        let merged = p.merge(g_after, ca, cb);
        cascade(g_after, p, merged);
    }
}

/// Handles a weight change of edge `(a, b)` from `old_weight` to `new_weight`.
pub fn edge_weight_updating(
    g_after: &SnapshotGraph,
    p: &mut Partition,
    (a, b, new_weight): (NodeId, NodeId, Weight),
    old_weight: Weight,
) {
    let (Some(ca), Some(cb)) = (p.community_of(a), p.community_of(b)) else {
        return;
    };
    let delta = new_weight - old_weight;
    if ca == cb {
        p.add_intra(ca, delta);
        if new_weight < old_weight {
            absorb_if_dominated(g_after, p, ca);
        }
    } else {
        p.add_inter(ca, cb, delta);
        if new_weight > old_weight && pair_test(p.inter_weight(ca, cb), p.intra_weight(ca), p.intra_weight(cb)) {
            let merged = p.merge(g_after, ca, cb);
            cascade(g_after, p, merged);
        }
    }
}

fn handle(g: &SnapshotGraph, p: &mut Partition, change: Applied) {
    match change {
        Applied::NodeRemoved { node, edges } => node_removing(g, p, node, &edges),
        Applied::EdgeRemoved { a, b, weight } => edge_removing(g, p, (a, b), weight),
        Applied::NodeAdded { node } => node_addition(g, p, node),
        Applied::EdgeAdded { a, b, weight } => edge_addition(g, p, (a, b, weight)),
        Applied::WeightUpdated { a, b, old, new } => edge_weight_updating(g, p, (a, b, new), old),
    }
}

/// One snapshot transition: returns `(G_{t+1}, Cs_{t+1})`.
pub fn step(g: &SnapshotGraph, p: &Partition, u: &UpdateSet) -> Result<(SnapshotGraph, Partition)> {
    let mut tracker = Dyci {
        graph: g.clone(),
        partition: p.clone(),
    };
    tracker.step(u)?;
    Ok((tracker.graph, tracker.partition))
}

/// Owns the current snapshot and its partition and advances both in place.
#[derive(Clone, Debug)]
pub struct Dyci {
    graph: SnapshotGraph,
    partition: Partition,
}

impl Dyci {
    /// Seeds the tracker on the first snapshot.
    pub fn new(g0: SnapshotGraph) -> Self {
        let partition = seed_partition(&g0);
        Self { graph: g0, partition }
    }

    /// Resumes from an existing snapshot and a partition of it.
    pub fn resume(graph: SnapshotGraph, partition: Partition) -> Result<Self> {
        if partition.node_count() != graph.node_count() || graph.nodes().any(|n| partition.community_of(n).is_none()) {
            return Err(Error::PartitionMismatch("partition does not cover the graph".into()));
        }
        Ok(Self { graph, partition })
    }

    pub fn graph(&self) -> &SnapshotGraph {
        &self.graph
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn into_parts(self) -> (SnapshotGraph, Partition) {
        (self.graph, self.partition)
    }

    /// Applies `u` handler by handler. The set is validated first, so on
    /// error nothing has changed.
    pub fn step(&mut self, u: &UpdateSet) -> Result<()> {
        u.validate(&self.graph)?;
        let partition = &mut self.partition;
        apply_validated(&mut self.graph, u, |g, change| handle(g, partition, change));
        let t = self.graph.t() + 1;
        self.graph.set_t(t);
        Ok(())
    }
}
