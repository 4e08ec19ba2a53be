//! Incremental force-directed layout of a snapshot sequence.
//!
//! Each frame starts from the previous one. Forces follow Fruchterman and
//! Reingold: every pair of nodes repels with `k^2 / d`, every edge attracts
//! with `w * d^2 / k`, where `k` is the ideal edge length and `w` the edge
//! weight. A weak linear pull toward the origin keeps disconnected pieces
//! from drifting off. Moves are capped by a temperature that cools
//! geometrically; the run stops once no node moves more than the tolerance.
//!
//! Positioning modes:
//!
//! * `Free`: every node moves.
//! * `Fixed`: nodes of the previous frame are pinned; only new nodes move.
//! * `Anchored`: each node of the previous frame is tied by a linear spring
//!   to an invisible pinned copy of itself at its previous position.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeTable, SnapshotGraph, Weight};
use crate::partition::{CommunityId, Partition};

pub const DEFAULT_ANCHOR_STIFFNESS: f64 = 0.5;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum LayoutMode {
    Free,
    Fixed,
    /// `stiffness` is relative to a unit-weight edge at the ideal length.
    Anchored {
        stiffness: f64,
    },
}

impl LayoutMode {
    pub fn anchored() -> Self {
        LayoutMode::Anchored {
            stiffness: DEFAULT_ANCHOR_STIFFNESS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LayoutMode::Anchored { stiffness } if !(stiffness.is_finite() && stiffness > 0.0) => Err(
                Error::InvalidConfig(format!("anchor stiffness {stiffness} must be positive")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutConfig {
    pub ideal_length: f64,
    pub max_iterations: usize,
    /// Converged once the largest move of an iteration is below this.
    pub tolerance: f64,
    pub cooling: f64,
    /// Starting temperature is this times `ideal_length * sqrt(n)`.
    pub initial_temperature: f64,
    pub gravity: f64,
    /// Half-width of the random offset given to newly placed nodes.
    pub jitter: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            ideal_length: 1.0,
            max_iterations: 1000,
            tolerance: 1e-3,
            cooling: 0.95,
            initial_temperature: 0.1,
            gravity: 0.05,
            jitter: 0.1,
        }
    }
}

/// Positions and visual attributes of one snapshot.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LayoutFrame {
    pub t: usize,
    pub positions: BTreeMap<NodeId, (f64, f64)>,
    pub community_of: BTreeMap<NodeId, CommunityId>,
    pub presence: BTreeMap<NodeId, u32>,
    pub initial: BTreeMap<NodeId, bool>,
    pub edges: Vec<(NodeId, NodeId, Weight)>,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
    pub iterations: usize,
}

/// Lays out `g`, starting from `prev` when given.
pub fn layout_step<R: Rng + ?Sized>(
    g: &SnapshotGraph,
    prev: Option<&LayoutFrame>,
    mode: LayoutMode,
    cfg: &LayoutConfig,
    rng: &mut R,
) -> Result<LayoutFrame> {
    mode.validate()?;
    let nodes: Vec<NodeId> = g.nodes().collect();
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let k = cfg.ideal_length;

    let previous = |n: NodeId| prev.and_then(|f| f.positions.get(&n).copied());
    let mut pos = initial_positions(g, &nodes, &previous, cfg, rng);

    let pinned: Vec<bool> = nodes
        .iter()
        .map(|&n| mode == LayoutMode::Fixed && previous(n).is_some())
        .collect();
    let anchors: Vec<Option<(f64, f64)>> = nodes
        .iter()
        .map(|&n| match mode {
            LayoutMode::Anchored { .. } => previous(n),
            _ => None,
        })
        .collect();
    let stiffness = match mode {
        LayoutMode::Anchored { stiffness } => stiffness,
        _ => 0.0,
    };
    let edges: Vec<(usize, usize, Weight)> = g.edges().map(|(a, b, w)| (index[&a], index[&b], w)).collect();

    let n = nodes.len();
    let mut temperature = cfg.initial_temperature * k * (n as f64).sqrt();
    let mut converged = pinned.iter().all(|&p| p);
    let mut iterations = 0;
    let mut force = vec![(0.0f64, 0.0f64); n];
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        force.iter_mut().for_each(|f| *f = (0.0, 0.0));

        for i in 0..n {
            for j in (i + 1)..n {
                let (mut dx, mut dy) = (pos[i].0 - pos[j].0, pos[i].1 - pos[j].1);
                let mut d = (dx * dx + dy * dy).sqrt();
                if d < 1e-9 {
                    // Coincident nodes: separate along an index-derived direction.
                    let angle = (i * 7 + j * 13) as f64;
                    (dx, dy, d) = (angle.cos() * 1e-9, angle.sin() * 1e-9, 1e-9);
                }
                let push = k * k / d;
                let (fx, fy) = (dx / d * push, dy / d * push);
                force[i].0 += fx;
                force[i].1 += fy;
                force[j].0 -= fx;
                force[j].1 -= fy;
            }
        }
        for &(a, b, w) in &edges {
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let d = (dx * dx + dy * dy).sqrt();
            if d < 1e-12 {
                continue;
            }
            let pull = w * d * d / k;
            let (fx, fy) = (dx / d * pull, dy / d * pull);
            force[a].0 -= fx;
            force[a].1 -= fy;
            force[b].0 += fx;
            force[b].1 += fy;
        }

        let mut largest = 0.0f64;
        for i in 0..n {
            if pinned[i] {
                continue;
            }
            let (mut fx, mut fy) = force[i];
            fx -= cfg.gravity * pos[i].0;
            fy -= cfg.gravity * pos[i].1;
            if let Some((ax, ay)) = anchors[i] {
                fx -= stiffness * (pos[i].0 - ax);
                fy -= stiffness * (pos[i].1 - ay);
            }
            let magnitude = (fx * fx + fy * fy).sqrt();
            if magnitude < 1e-12 {
                continue;
            }
            let step = magnitude.min(temperature);
            pos[i].0 += fx / magnitude * step;
            pos[i].1 += fy / magnitude * step;
            largest = largest.max(step);
        }
        temperature *= cfg.cooling;
        converged = largest < cfg.tolerance;
    }

    Ok(LayoutFrame {
        t: g.t(),
        positions: nodes.iter().copied().zip(pos).collect(),
        edges: g.edges().collect(),
        converged,
        iterations,
        ..Default::default()
    })
}

/// Previous positions where available, then weighted neighbour centroids
/// spreading outward from placed nodes, then a circle for whatever is left.
fn initial_positions<R: Rng + ?Sized>(
    g: &SnapshotGraph,
    nodes: &[NodeId],
    previous: &dyn Fn(NodeId) -> Option<(f64, f64)>,
    cfg: &LayoutConfig,
    rng: &mut R,
) -> Vec<(f64, f64)> {
    let mut placed: BTreeMap<NodeId, (f64, f64)> = nodes.iter().filter_map(|&n| previous(n).map(|p| (n, p))).collect();

    let jitter = cfg.jitter * cfg.ideal_length;
    loop {
        let mut progress = false;
        for &n in nodes {
            if placed.contains_key(&n) {
                continue;
            }
            let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
            for (j, w) in g.neighbors(n) {
                if let Some(&(x, y)) = placed.get(&j) {
                    sx += w * x;
                    sy += w * y;
                    sw += w;
                }
            }
            if sw > 0.0 {
                let x = sx / sw + rng.random_range(-jitter..=jitter);
                let y = sy / sw + rng.random_range(-jitter..=jitter);
                placed.insert(n, (x, y));
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }

    // Unreached components, in BFS order so neighbours sit close together.
    let mut rest = Vec::new();
    let mut seen = BTreeSet::new();
    for &start in nodes {
        if placed.contains_key(&start) || !seen.insert(start) {
            continue;
        }
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            rest.push(i);
            for (j, _) in g.neighbors(i) {
                if seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
    }
    if !rest.is_empty() {
        let k = cfg.ideal_length;
        let (center, radius) = if placed.is_empty() {
            ((0.0, 0.0), rest.len() as f64 * k / std::f64::consts::TAU)
        } else {
            let m = placed.len() as f64;
            let cx = placed.values().map(|p| p.0).sum::<f64>() / m;
            let cy = placed.values().map(|p| p.1).sum::<f64>() / m;
            let reach = placed
                .values()
                .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
                .fold(0.0, f64::max);
            ((cx, cy), reach + k)
        };
        if placed.is_empty() && rest.len() == 1 {
            placed.insert(rest[0], center);
        } else {
            let step = std::f64::consts::TAU / rest.len() as f64;
            for (i, &n) in rest.iter().enumerate() {
                let a = step * i as f64;
                placed.insert(n, (center.0 + radius * a.cos(), center.1 + radius * a.sin()));
            }
        }
    }
    nodes.iter().map(|n| placed[n]).collect()
}

/// Appearance counts over the snapshots seen so far, plus the node set of
/// the first snapshot.
#[derive(Clone, Debug, Default)]
pub struct PresenceTracker {
    counts: BTreeMap<NodeId, u32>,
    initial: BTreeSet<NodeId>,
    started: bool,
}

impl PresenceTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, g: &SnapshotGraph) {
        if !self.started {
            self.initial = g.nodes().collect();
            self.started = true;
        }
        for n in g.nodes() {
            *self.counts.entry(n).or_insert(0) += 1;
        }
    }

    pub fn presence(&self, n: NodeId) -> u32 {
        self.counts.get(&n).copied().unwrap_or(0)
    }

    pub fn is_initial(&self, n: NodeId) -> bool {
        self.initial.contains(&n)
    }
}

/// Fills community, presence and initial-node flags of `frame`.
pub fn annotate(mut frame: LayoutFrame, p: &Partition, history: &PresenceTracker) -> Result<LayoutFrame> {
    if p.node_count() != frame.positions.len() {
        return Err(Error::PartitionMismatch(format!(
            "partition has {} nodes, frame has {}",
            p.node_count(),
            frame.positions.len()
        )));
    }
    frame.community_of.clear();
    frame.presence.clear();
    frame.initial.clear();
    for &n in frame.positions.keys() {
        let c = p
            .community_of(n)
            .ok_or_else(|| Error::PartitionMismatch(format!("{n} has no community")))?;
        let seen = history.presence(n);
        if seen == 0 {
            return Err(Error::PartitionMismatch(format!("{n} was never observed")));
        }
        frame.community_of.insert(n, c);
        frame.presence.insert(n, seen);
        frame.initial.insert(n, history.is_initial(n));
    }
    Ok(frame)
}

/// Mean distance moved by nodes present in both frames.
pub fn mean_displacement(prev: &LayoutFrame, next: &LayoutFrame) -> Option<f64> {
    let moves: Vec<f64> = next
        .positions
        .iter()
        .filter_map(|(n, &(x, y))| {
            prev.positions
                .get(n)
                .map(|&(px, py)| ((x - px).powi(2) + (y - py).powi(2)).sqrt())
        })
        .collect();
    if moves.is_empty() {
        None
    } else {
        Some(moves.iter().sum::<f64>() / moves.len() as f64)
    }
}

/// Normalised stress against hop distances, after the best uniform scaling
/// of the layout. Pairs in different components are ignored.
pub fn normalized_stress(frame: &LayoutFrame, g: &SnapshotGraph) -> f64 {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let index: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (s, &src) in nodes.iter().enumerate() {
        let mut hops = vec![usize::MAX; nodes.len()];
        hops[s] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(i) = queue.pop_front() {
            let hi = hops[index[&i]];
            for (j, _) in g.neighbors(i) {
                let jx = index[&j];
                if hops[jx] == usize::MAX {
                    hops[jx] = hi + 1;
                    queue.push_back(j);
                }
            }
        }
        let (sx, sy) = frame.positions[&src];
        for (t, &dst) in nodes.iter().enumerate().skip(s + 1) {
            if hops[t] == usize::MAX {
                continue;
            }
            let (tx, ty) = frame.positions[&dst];
            let d = ((sx - tx).powi(2) + (sy - ty).powi(2)).sqrt();
            pairs.push((d, hops[t] as f64));
        }
    }
    if pairs.is_empty() {
        return 0.0;
    }
    let num: f64 = pairs.iter().map(|&(d, h)| d / h).sum();
    let den: f64 = pairs.iter().map(|&(d, h)| (d / h).powi(2)).sum();
    let scale = if den > 0.0 { num / den } else { 1.0 };
    pairs.iter().map(|&(d, h)| ((scale * d - h) / h).powi(2)).sum::<f64>() / pairs.len() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesDocument {
    pub frames: Vec<FrameRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t: usize,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub community: u32,
    pub presence: u32,
    pub initial: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub s: String,
    pub d: String,
    pub w: f64,
}

impl FrameRecord {
    /// Export form of an annotated frame, nodes and edges sorted by name.
    pub fn from_frame(frame: &LayoutFrame, table: &NodeTable) -> Result<Self> {
        let mut nodes = frame
            .positions
            .iter()
            .map(|(&n, &(x, y))| {
                let missing = || Error::PartitionMismatch(format!("frame {} is not annotated for {n}", frame.t));
                Ok(NodeRecord {
                    id: table.name(n).to_owned(),
                    x,
                    y,
                    community: frame.community_of.get(&n).ok_or_else(missing)?.0,
                    presence: *frame.presence.get(&n).ok_or_else(missing)?,
                    initial: *frame.initial.get(&n).ok_or_else(missing)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut edges: Vec<EdgeRecord> = frame
            .edges
            .iter()
            .map(|&(a, b, w)| {
                let (s, d) = (table.name(a), table.name(b));
                let (s, d) = if s <= d { (s, d) } else { (d, s) };
                EdgeRecord {
                    s: s.to_owned(),
                    d: d.to_owned(),
                    w,
                }
            })
            .collect();
        edges.sort_by(|a, b| (&a.s, &a.d).cmp(&(&b.s, &b.d)));
        Ok(Self {
            t: frame.t,
            nodes,
            edges,
        })
    }
}
