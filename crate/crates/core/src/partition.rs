//! Node-to-community assignment with cached intra- and inter-community weights.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SnapshotGraph, Weight};

/// Inter-community entries at or below this value are treated as gone.
const RESIDUE: Weight = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommunityId(pub u32);

impl fmt::Display for CommunityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

fn pair(a: CommunityId, b: CommunityId) -> (CommunityId, CommunityId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// A community partition of one snapshot.
///
/// `intra` holds the intra-community weight IW of every community, `inter`
/// the inter-community weight INW of every adjacent pair, keyed once per
/// unordered pair. Together they account for every edge exactly once.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Partition {
    membership: BTreeMap<NodeId, CommunityId>,
    communities: BTreeMap<CommunityId, BTreeSet<NodeId>>,
    intra: BTreeMap<CommunityId, Weight>,
    inter: BTreeMap<(CommunityId, CommunityId), Weight>,
    next_id: u32,
}

impl Partition {
    /// Builds a partition from explicit labels. Every node of `g` must be
    /// labelled and no other node may appear.
    pub fn from_assignment<I>(g: &SnapshotGraph, labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, CommunityId)>,
    {
        let mut groups: BTreeMap<CommunityId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (n, c) in labels {
            if !g.contains_node(n) {
                return Err(Error::PartitionMismatch(format!("{n} is not in the graph")));
            }
            if !seen.insert(n) {
                return Err(Error::PartitionMismatch(format!("{n} is labelled twice")));
            }
            groups.entry(c).or_default().insert(n);
        }
        if seen.len() != g.node_count() {
            let missing = g.nodes().find(|n| !seen.contains(n)).expect("some node is unlabelled");
            return Err(Error::PartitionMismatch(format!("{missing} has no community")));
        }
        let mut p = Partition {
            next_id: groups.keys().next_back().map_or(0, |c| c.0 + 1),
            ..Default::default()
        };
        for (c, members) in groups {
            p.attach(g, c, members);
        }
        Ok(p)
    }

    /// Every node in its own community, ids in node order.
    pub fn singletons(g: &SnapshotGraph) -> Self {
        let labels = g.nodes().enumerate().map(|(i, n)| (n, CommunityId(i as u32)));
        Self::from_assignment(g, labels).expect("labels cover the graph")
    }

    pub fn community_of(&self, n: NodeId) -> Option<CommunityId> {
        self.membership.get(&n).copied()
    }

    pub fn members(&self, c: CommunityId) -> Option<&BTreeSet<NodeId>> {
        self.communities.get(&c)
    }

    /// `(node, community)` pairs in node order.
    pub fn membership(&self) -> impl Iterator<Item = (NodeId, CommunityId)> + '_ {
        self.membership.iter().map(|(&n, &c)| (n, c))
    }

    pub fn communities(&self) -> impl Iterator<Item = (CommunityId, &BTreeSet<NodeId>)> + '_ {
        self.communities.iter().map(|(&c, m)| (c, m))
    }

    pub fn community_count(&self) -> usize {
        self.communities.len()
    }

    pub fn node_count(&self) -> usize {
        self.membership.len()
    }

    /// Cached IW of `c` (0 for an unknown community).
    pub fn intra_weight(&self, c: CommunityId) -> Weight {
        self.intra.get(&c).copied().unwrap_or(0.0)
    }

    /// Cached INW between `a` and `b`; absent pairs are 0.
    pub fn inter_weight(&self, a: CommunityId, b: CommunityId) -> Weight {
        if a == b {
            return 0.0;
        }
        self.inter.get(&pair(a, b)).copied().unwrap_or(0.0)
    }

    /// All cached INW entries as `(lo, hi, weight)`.
    pub fn inter_weights(&self) -> impl Iterator<Item = (CommunityId, CommunityId, Weight)> + '_ {
        self.inter.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Total weight recorded by the caches. Equals `M` of the graph.
    pub fn accounted_weight(&self) -> Weight {
        self.intra.values().sum::<Weight>() + self.inter.values().sum::<Weight>()
    }

    /// Modularity evaluated from the caches alone.
    pub fn cached_modularity(&self) -> Option<f64> {
        let m = self.accounted_weight();
        if m <= 0.0 {
            return None;
        }
        let mut volume: BTreeMap<CommunityId, Weight> = self.intra.iter().map(|(&c, &w)| (c, 2.0 * w)).collect();
        for (&(a, b), &w) in &self.inter {
            *volume.entry(a).or_default() += w;
            *volume.entry(b).or_default() += w;
        }
        let covered: Weight = self.intra.values().sum::<Weight>() / m;
        let expected: f64 = volume.values().map(|d| (d / (2.0 * m)).powi(2)).sum();
        Some(covered - expected)
    }

    /// Same grouping of nodes, regardless of community ids.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        let groups = |p: &Partition| p.communities.values().cloned().collect::<BTreeSet<_>>();
        groups(self) == groups(other)
    }

    pub(crate) fn fresh_id(&mut self) -> CommunityId {
        let id = CommunityId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn add_intra(&mut self, c: CommunityId, delta: Weight) {
        *self.intra.entry(c).or_insert(0.0) += delta;
    }

    pub(crate) fn add_inter(&mut self, a: CommunityId, b: CommunityId, delta: Weight) {
        let key = pair(a, b);
        let w = self.inter.entry(key).or_insert(0.0);
        *w += delta;
        if *w <= RESIDUE {
            self.inter.remove(&key);
        }
    }

    /// Places `n` (already in `g` with its edges) into `c`, creating `c` if
    /// needed, and accounts for its incident edges.
    pub(crate) fn insert_node(&mut self, g: &SnapshotGraph, n: NodeId, c: CommunityId) {
        self.membership.insert(n, c);
        self.communities.entry(c).or_default().insert(n);
        self.intra.entry(c).or_insert(0.0);
        for (j, w) in g.neighbors(n) {
            match self.membership.get(&j).copied() {
                Some(cj) if cj == c => self.add_intra(c, w),
                Some(cj) => self.add_inter(c, cj, w),
                None => {}
            }
        }
    }

    /// Removes `n` whose incident edges are already gone from the graph.
    /// `edges` are those incident edges, used to settle the caches.
    pub(crate) fn remove_node(&mut self, n: NodeId, edges: &[(NodeId, Weight)]) -> Option<CommunityId> {
        let c = self.membership.remove(&n)?;
        for &(j, w) in edges {
            match self.membership.get(&j).copied() {
                Some(cj) if cj == c => self.add_intra(c, -w),
                Some(cj) => self.add_inter(c, cj, -w),
                None => {}
            }
        }
        let members = self.communities.get_mut(&c).expect("community of a member");
        members.remove(&n);
        if members.is_empty() {
            self.communities.remove(&c);
            self.intra.remove(&c);
        }
        Some(c)
    }

    /// INW between `c` and each adjacent community, summed from the graph.
    pub(crate) fn neighbor_weights(&self, g: &SnapshotGraph, c: CommunityId) -> BTreeMap<CommunityId, Weight> {
        let mut out = BTreeMap::new();
        for &i in self.communities.get(&c).into_iter().flatten() {
            for (j, w) in g.neighbors(i) {
                if let Some(&cj) = self.membership.get(&j) {
                    if cj != c {
                        *out.entry(cj).or_insert(0.0) += w;
                    }
                }
            }
        }
        out
    }

    /// Drops `c` and every cache entry touching it; its members become
    /// unassigned until re-attached.
    pub(crate) fn detach(&mut self, g: &SnapshotGraph, c: CommunityId) -> BTreeSet<NodeId> {
        for other in self.neighbor_weights(g, c).into_keys() {
            self.inter.remove(&pair(c, other));
        }
        let members = self.communities.remove(&c).unwrap_or_default();
        self.intra.remove(&c);
        for n in &members {
            self.membership.remove(n);
        }
        members
    }

    /// Creates community `c` over currently unassigned `members` and counts
    /// their edges to already assigned nodes.
    pub(crate) fn attach(&mut self, g: &SnapshotGraph, c: CommunityId, members: BTreeSet<NodeId>) {
        for &n in &members {
            self.membership.insert(n, c);
        }
        let mut iw = 0.0;
        for &i in &members {
            for (j, w) in g.neighbors(i) {
                match self.membership.get(&j).copied() {
                    Some(cj) if cj == c => {
                        if i < j {
                            iw += w;
                        }
                    }
                    Some(cj) => self.add_inter(c, cj, w),
                    None => {}
                }
            }
        }
        self.intra.insert(c, iw);
        self.communities.insert(c, members);
    }

    /// Merges two adjacent or non-adjacent communities. The side with the
    /// larger IW keeps its id (smaller id on ties). Returns the survivor.
    pub(crate) fn merge(&mut self, g: &SnapshotGraph, a: CommunityId, b: CommunityId) -> CommunityId {
        debug_assert_ne!(a, b);
        let (iwa, iwb) = (self.intra_weight(a), self.intra_weight(b));
        let (keep, gone) = if iwa > iwb || (iwa == iwb && a < b) {
            (a, b)
        } else {
            (b, a)
        };

        let between = self.inter.remove(&pair(a, b)).unwrap_or(0.0);
        let neighbors: Vec<CommunityId> = self
            .neighbor_weights(g, gone)
            .into_keys()
            .filter(|&x| x != keep)
            .collect();
        for x in neighbors {
            if let Some(w) = self.inter.remove(&pair(gone, x)) {
                *self.inter.entry(pair(keep, x)).or_insert(0.0) += w;
            }
        }
        let iw_gone = self.intra.remove(&gone).unwrap_or(0.0);
        self.add_intra(keep, iw_gone + between);

        let moved = self.communities.remove(&gone).unwrap_or_default();
        for &n in &moved {
            self.membership.insert(n, keep);
        }
        self.communities.entry(keep).or_default().extend(moved);
        keep
    }

    /// Connected components of the subgraph induced by `c`, each sorted, in
    /// order of their smallest node.
    pub(crate) fn components(&self, g: &SnapshotGraph, c: CommunityId) -> Vec<BTreeSet<NodeId>> {
        let Some(members) = self.communities.get(&c) else {
            return Vec::new();
        };
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in members {
            if !seen.insert(start) {
                continue;
            }
            let mut comp = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for (j, _) in g.neighbors(i) {
                    if members.contains(&j) && seen.insert(j) {
                        comp.insert(j);
                        queue.push_back(j);
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}
