//! Planted-partition dynamic graph generator.
//!
//! Nodes carry a fixed planted community. Snapshot 0 is a stochastic block
//! model; each later snapshot applies churn in the update-class order:
//! node removals, edge removals, node additions (wired to the survivors with
//! block probabilities), edge additions and weight redraws. Every churn rate
//! is a fraction of the current node or edge count.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NodeId, NodeTable, SnapshotGraph};
use crate::io::{format_snapshot, snapshot_path};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChurnRates {
    pub node_remove: f64,
    pub edge_remove: f64,
    pub node_add: f64,
    pub edge_add: f64,
    pub weight_update: f64,
}

impl ChurnRates {
    /// The same rate for all five classes.
    pub fn uniform(rate: f64) -> Self {
        Self {
            node_remove: rate,
            edge_remove: rate,
            node_add: rate,
            edge_add: rate,
            weight_update: rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub nodes: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Inclusive integer weight range for edges inside a community.
    pub w_in: (u32, u32),
    pub w_out: (u32, u32),
    pub snapshots: usize,
    #[serde(default)]
    pub churn: ChurnRates,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    /// Roughly the shape of a small retweet corpus: about 490 live nodes,
    /// almost complete turnover between snapshots, 13 snapshots.
    pub fn ds2_like(seed: u64) -> Self {
        Self {
            nodes: 490,
            communities: 12,
            p_in: 0.053,
            p_out: 0.0006,
            w_in: (1, 5),
            w_out: (1, 2),
            snapshots: 13,
            churn: ChurnRates {
                node_remove: 0.96,
                edge_remove: 0.05,
                node_add: 0.96,
                edge_add: 0.05,
                weight_update: 0.05,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.nodes == 0 || self.communities == 0 || self.snapshots == 0 {
            return bad("nodes, communities and snapshots must be positive".into());
        }
        if self.communities > self.nodes {
            return bad(format!("{} communities exceed {} nodes", self.communities, self.nodes));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        for (name, (lo, hi)) in [("w_in", self.w_in), ("w_out", self.w_out)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} = [{lo}, {hi}] must be a positive range"));
            }
        }
        let c = &self.churn;
        for (name, r) in [
            ("node_remove", c.node_remove),
            ("edge_remove", c.edge_remove),
            ("node_add", c.node_add),
            ("edge_add", c.edge_add),
            ("weight_update", c.weight_update),
        ] {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("churn rate {name} = {r} must be non-negative"));
            }
        }
        if c.node_remove > 1.0 || c.edge_remove > 1.0 || c.weight_update > 1.0 {
            return bad("removal and update rates cannot exceed 1".into());
        }
        Ok(())
    }
}

/// A generated sequence with its planted communities.
#[derive(Clone, Debug)]
pub struct Synthetic {
    pub graphs: Vec<SnapshotGraph>,
    pub table: NodeTable,
    /// Planted community of every node in each snapshot.
    pub truth: Vec<BTreeMap<NodeId, u32>>,
}

impl Synthetic {
    /// Writes `snapshot_t.edges` and `truth_t.csv` for every snapshot.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (g, truth) in self.graphs.iter().zip(&self.truth) {
            fs::write(snapshot_path(dir, g.t()), format_snapshot(g, &self.table))?;
            let mut rows: Vec<(&str, u32)> = truth.iter().map(|(&n, &c)| (self.table.name(n), c)).collect();
            rows.sort_unstable();
            let text: String = rows.iter().map(|(n, c)| format!("{n},{c}\n")).collect();
            fs::write(dir.join(format!("truth_{}.csv", g.t())), text)?;
        }
        Ok(())
    }

    /// Distinct nodes and distinct edges over the whole sequence.
    pub fn cumulative_counts(&self) -> (usize, usize) {
        let mut nodes = std::collections::BTreeSet::new();
        let mut edges = std::collections::BTreeSet::new();
        for g in &self.graphs {
            nodes.extend(g.nodes());
            edges.extend(g.edges().map(|(a, b, _)| (a, b)));
        }
        (nodes.len(), edges.len())
    }
}

struct Generator<'a> {
    spec: &'a GeneratorSpec,
    rng: ChaCha8Rng,
    table: NodeTable,
    planted: BTreeMap<NodeId, u32>,
    g: SnapshotGraph,
}

impl Generator<'_> {
    fn new_node(&mut self, community: u32) -> NodeId {
        let n = self.table.intern(&format!("n{}", self.table.len()));
        self.planted.insert(n, community);
        self.g.add_node(n);
        n
    }

    fn draw_weight(&mut self, same: bool) -> f64 {
        let (lo, hi) = if same { self.spec.w_in } else { self.spec.w_out };
        self.rng.random_range(lo..=hi) as f64
    }

    fn link_probability(&self, a: NodeId, b: NodeId) -> (bool, f64) {
        let same = self.planted[&a] == self.planted[&b];
        (same, if same { self.spec.p_in } else { self.spec.p_out })
    }

    /// Wires `n` to every other current node with block probabilities.
    fn wire(&mut self, n: NodeId) {
        let others: Vec<NodeId> = self.g.nodes().filter(|&j| j != n).collect();
        for j in others {
            let (same, p) = self.link_probability(n, j);
            if p > 0.0 && self.rng.random_bool(p) {
                let w = self.draw_weight(same);
                self.g.add_edge(n, j, w).expect("positive weight");
            }
        }
    }

    fn count(&self, rate: f64, of: usize) -> usize {
        (rate * of as f64).round() as usize
    }

    fn advance(&mut self) {
        let churn = self.spec.churn.clone();

        let nodes: Vec<NodeId> = self.g.nodes().collect();
        let k = self.count(churn.node_remove, nodes.len()).min(nodes.len());
        for n in nodes.choose_multiple(&mut self.rng, k).copied().collect::<Vec<_>>() {
            self.g.remove_node(n);
            self.planted.remove(&n);
        }

        let edges: Vec<(NodeId, NodeId)> = self.g.edges().map(|(a, b, _)| (a, b)).collect();
        let k = self.count(churn.edge_remove, edges.len()).min(edges.len());
        for (a, b) in edges.choose_multiple(&mut self.rng, k).copied().collect::<Vec<_>>() {
            self.g.remove_edge(a, b);
        }

        let k = self.count(churn.node_add, nodes.len());
        for _ in 0..k {
            let c = self.rng.random_range(0..self.spec.communities as u32);
            let n = self.new_node(c);
            self.wire(n);
        }

        let target = self.count(churn.edge_add, self.g.edge_count());
        let pool: Vec<NodeId> = self.g.nodes().collect();
        let mut added = 0;
        let mut attempts = 0;
        while added < target && pool.len() > 1 && attempts < 1000 * (target + 1) {
            attempts += 1;
            let (a, b) = (
                *pool.choose(&mut self.rng).unwrap(),
                *pool.choose(&mut self.rng).unwrap(),
            );
            if a == b || self.g.weight(a, b).is_some() {
                continue;
            }
            let (same, p) = self.link_probability(a, b);
            if p > 0.0 && self.rng.random_bool(p) {
                let w = self.draw_weight(same);
                self.g.add_edge(a, b, w).expect("positive weight");
                added += 1;
            }
        }

        let edges: Vec<(NodeId, NodeId)> = self.g.edges().map(|(a, b, _)| (a, b)).collect();
        let k = self.count(churn.weight_update, edges.len()).min(edges.len());
        for (a, b) in edges.choose_multiple(&mut self.rng, k).copied().collect::<Vec<_>>() {
            let same = self.planted[&a] == self.planted[&b];
            let w = self.draw_weight(same);
            self.g.add_edge(a, b, w).expect("positive weight");
        }
    }
}

/// Generates the whole sequence in memory.
pub fn generate(spec: &GeneratorSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut gen = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        table: NodeTable::new(),
        planted: BTreeMap::new(),
        g: SnapshotGraph::new(0),
    };
    let initial: Vec<NodeId> = (0..spec.nodes)
        .map(|i| gen.new_node((i % spec.communities) as u32))
        .collect();
    for (i, &a) in initial.iter().enumerate() {
        for &b in &initial[i + 1..] {
            let (same, p) = gen.link_probability(a, b);
            if p > 0.0 && gen.rng.random_bool(p) {
                let w = gen.draw_weight(same);
                gen.g.add_edge(a, b, w).expect("positive weight");
            }
        }
    }

    let mut graphs = vec![gen.g.clone()];
    let mut truth = vec![gen.planted.clone()];
    for t in 1..spec.snapshots {
        gen.advance();
        gen.g.set_t(t);
        graphs.push(gen.g.clone());
        truth.push(gen.planted.clone());
    }
    Ok(Synthetic {
        graphs,
        table: gen.table,
        truth,
    })
}

/// Reads a JSON spec, generates and writes the sequence to `out`.
pub fn synth(spec_path: &Path, out: &Path) -> Result<Synthetic> {
    let spec: GeneratorSpec = serde_json::from_str(&fs::read_to_string(spec_path)?)?;
    let s = generate(&spec)?;
    s.write(out)?;
    Ok(s)
}
