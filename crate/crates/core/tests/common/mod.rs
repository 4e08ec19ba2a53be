#![allow(dead_code)]

use std::collections::BTreeMap;

use dyntrack_core::{CommunityId, NodeId, Partition, SnapshotGraph};
use proptest::prelude::*;

/// Graph on nodes `0..n` (some possibly isolated) with integer weights 1..=10.
pub fn graph(max_nodes: u32, max_edges: usize) -> impl Strategy<Value = SnapshotGraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        prop::collection::vec((0..n, 0..n, 1u32..=10), 0..=max_edges).prop_map(move |edges| {
            let mut g = SnapshotGraph::new(0);
            for i in 0..n {
                g.add_node(NodeId(i));
            }
            for (a, b, w) in edges {
                if a != b {
                    g.add_edge(NodeId(a), NodeId(b), w as f64).unwrap();
                }
            }
            g
        })
    })
}

/// A graph with at least one edge, plus a community label per node.
pub fn labelled_graph(
    max_nodes: u32,
    max_edges: usize,
) -> impl Strategy<Value = (SnapshotGraph, BTreeMap<NodeId, u32>)> {
    graph(max_nodes, max_edges)
        .prop_filter("needs an edge", |g| g.edge_count() > 0)
        .prop_flat_map(|g| {
            let n = g.node_count();
            prop::collection::vec(0..n as u32, n).prop_map(move |labels| {
                let map = g.nodes().zip(labels).collect();
                (g.clone(), map)
            })
        })
}

pub fn partition_of(g: &SnapshotGraph, label: &BTreeMap<NodeId, u32>) -> Partition {
    Partition::from_assignment(g, label.iter().map(|(&n, &c)| (n, CommunityId(c)))).unwrap()
}

/// Straight double loop over ordered node pairs.
pub fn brute_modularity(g: &SnapshotGraph, label: &BTreeMap<NodeId, u32>) -> f64 {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let k: Vec<f64> = nodes.iter().map(|&n| g.neighbors(n).map(|(_, w)| w).sum()).collect();
    let two_m: f64 = k.iter().sum();
    let mut q = 0.0;
    for (i, &a) in nodes.iter().enumerate() {
        for (j, &b) in nodes.iter().enumerate() {
            if label[&a] == label[&b] {
                q += g.weight(a, b).unwrap_or(0.0) - k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// IW per community and INW per community pair, from the graph alone.
pub fn recount(
    g: &SnapshotGraph,
    p: &Partition,
) -> (BTreeMap<CommunityId, f64>, BTreeMap<(CommunityId, CommunityId), f64>) {
    let mut iw = BTreeMap::new();
    let mut inw = BTreeMap::new();
    for (a, b, w) in g.edges() {
        let (ca, cb) = (p.community_of(a).unwrap(), p.community_of(b).unwrap());
        if ca == cb {
            *iw.entry(ca).or_insert(0.0) += w;
        } else {
            *inw.entry((ca.min(cb), ca.max(cb))).or_insert(0.0) += w;
        }
    }
    (iw, inw)
}

pub fn caches_match(g: &SnapshotGraph, p: &Partition) -> bool {
    let (iw, inw) = recount(g, p);
    let cached: BTreeMap<_, _> = p.inter_weights().map(|(a, b, w)| ((a, b), w)).collect();
    p.node_count() == g.node_count()
        && g.nodes().all(|n| p.community_of(n).is_some())
        && p.communities()
            .all(|(c, m)| !m.is_empty() && p.intra_weight(c) == iw.get(&c).copied().unwrap_or(0.0))
        && cached == inw
}

/// Communities as sorted lists of node ids, for comparing groupings.
pub fn groups(p: &Partition) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = p.communities().map(|(_, m)| m.iter().map(|n| n.0).collect()).collect();
    out.sort();
    out
}
