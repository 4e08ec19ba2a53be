//! Python bindings for `dyntrack-core`.
//!
//! Nodes are addressed by their string ids on the Python side; each object
//! keeps its own id table and translates by name when graphs meet.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dyntrack_core::dyci::{seed_partition as seed, Dyci};
use dyntrack_core::ga::{evolve as run_ga, GaConfig};
use dyntrack_core::graph::diff_snapshots;
use dyntrack_core::layout::{self, LayoutConfig, LayoutFrame, LayoutMode};
use dyntrack_core::metrics;
use dyntrack_core::pipeline::{self, AlgorithmChoice, RunConfig};
use dyntrack_core::synth::{generate, GeneratorSpec};
use dyntrack_core::{CommunityId, Error, NodeTable, Partition, SnapshotGraph};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Labels = BTreeMap<String, u32>;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Undirected weighted snapshot with string node ids.
#[pyclass(module = "dyntrack", skip_from_py_object)]
#[derive(Clone, Default)]
struct Graph {
    graph: SnapshotGraph,
    table: NodeTable,
}

impl Graph {
    /// The same graph expressed in `table`'s ids.
    fn reindexed(&self, table: &mut NodeTable) -> SnapshotGraph {
        let mut out = SnapshotGraph::new(self.graph.t());
        for n in self.graph.nodes() {
            out.add_node(table.intern(self.table.name(n)));
        }
        for (a, b, w) in self.graph.edges() {
            let (a, b) = (table.intern(self.table.name(a)), table.intern(self.table.name(b)));
            out.add_edge(a, b, w).expect("weights were validated on insertion");
        }
        out
    }

    fn labels(&self, p: &Partition) -> BTreeMap<String, u32> {
        p.membership()
            .map(|(n, c)| (self.table.name(n).to_owned(), c.0))
            .collect()
    }

    fn partition(&self, labels: BTreeMap<String, u32>) -> PyResult<Partition> {
        let mut assignment = Vec::with_capacity(labels.len());
        for (name, c) in labels {
            let n = self
                .table
                .get(&name)
                .filter(|&n| self.graph.contains_node(n))
                .ok_or_else(|| PyValueError::new_err(format!("unknown node {name:?}")))?;
            assignment.push((n, CommunityId(c)));
        }
        Partition::from_assignment(&self.graph, assignment).map_err(to_py)
    }
}

#[pymethods]
impl Graph {
    #[new]
    #[pyo3(signature = (edges = Vec::new()))]
    fn new(edges: Vec<(String, String, f64)>) -> PyResult<Self> {
        let mut g = Graph::default();
        for (a, b, w) in edges {
            g.add_edge(&a, &b, w)?;
        }
        Ok(g)
    }

    /// Reads `snapshot_{t}.edges` style text.
    #[staticmethod]
    #[pyo3(signature = (path, t = 0))]
    fn read(path: PathBuf, t: usize) -> PyResult<Self> {
        let mut table = NodeTable::new();
        let graph = dyntrack_core::io::read_snapshot(&path, t, &mut table).map_err(to_py)?;
        Ok(Graph { graph, table })
    }

    fn add_node(&mut self, node: &str) {
        let n = self.table.intern(node);
        self.graph.add_node(n);
    }

    fn add_edge(&mut self, a: &str, b: &str, weight: f64) -> PyResult<()> {
        let (x, y) = (self.table.intern(a), self.table.intern(b));
        self.graph.add_edge(x, y, weight).map_err(to_py)
    }

    fn nodes(&self) -> Vec<String> {
        let mut names: Vec<String> = self.graph.nodes().map(|n| self.table.name(n).to_owned()).collect();
        names.sort();
        names
    }

    fn edges(&self) -> Vec<(String, String, f64)> {
        self.graph
            .edges()
            .map(|(a, b, w)| (self.table.name(a).to_owned(), self.table.name(b).to_owned(), w))
            .collect()
    }

    fn weight(&self, a: &str, b: &str) -> Option<f64> {
        self.graph.weight(self.table.get(a)?, self.table.get(b)?)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    #[getter]
    fn total_weight(&self) -> f64 {
        self.graph.total_weight()
    }

    fn __len__(&self) -> usize {
        self.graph.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.graph.node_count(),
            self.graph.edge_count()
        )
    }
}

/// Incremental community tracker fed one snapshot at a time.
#[pyclass(module = "dyntrack")]
struct Tracker {
    inner: Dyci,
    table: NodeTable,
}

#[pymethods]
impl Tracker {
    #[new]
    fn new(first: &Graph) -> Self {
        let mut table = NodeTable::new();
        let g0 = first.reindexed(&mut table);
        Tracker {
            inner: Dyci::new(g0),
            table,
        }
    }

    /// Advances to `next`, applying the difference from the current snapshot.
    /// Returns the number of elementary updates processed.
    fn step(&mut self, next: &Graph) -> PyResult<usize> {
        let mut g = next.reindexed(&mut self.table);
        g.set_t(self.inner.graph().t() + 1);
        let u = diff_snapshots(self.inner.graph(), &g);
        self.inner.step(&u).map_err(to_py)?;
        Ok(u.len())
    }

    /// Node id to community id.
    fn partition(&self) -> BTreeMap<String, u32> {
        self.inner
            .partition()
            .membership()
            .map(|(n, c)| (self.table.name(n).to_owned(), c.0))
            .collect()
    }

    fn modularity(&self) -> PyResult<f64> {
        metrics::modularity(self.inner.graph(), self.inner.partition()).map_err(to_py)
    }

    #[getter]
    fn community_count(&self) -> usize {
        self.inner.partition().community_count()
    }

    #[getter]
    fn t(&self) -> usize {
        self.inner.graph().t()
    }
}

/// Static partition of a single snapshot.
#[pyfunction]
fn seed_partition(graph: &Graph) -> BTreeMap<String, u32> {
    graph.labels(&seed(&graph.graph))
}

/// Modularity of `partition` (node id to community id) on `graph`.
#[pyfunction]
fn modularity(graph: &Graph, partition: BTreeMap<String, u32>) -> PyResult<f64> {
    let p = graph.partition(partition)?;
    metrics::modularity(&graph.graph, &p).map_err(to_py)
}

/// Runs the genetic algorithm; returns `(partition, modularity)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, population_size = 100, generations = 50, crossover_prob = 0.9, mutation_prob = 0.1, elite_fraction = 0.2, seed = 0))]
fn evolve(
    py: Python<'_>,
    graph: &Graph,
    population_size: usize,
    generations: usize,
    crossover_prob: f64,
    mutation_prob: f64,
    elite_fraction: f64,
    seed: u64,
) -> PyResult<(BTreeMap<String, u32>, f64)> {
    let cfg = GaConfig {
        population_size,
        crossover_prob,
        mutation_prob,
        elite_fraction,
        generations,
        rng_seed: seed,
    };
    let g = &graph.graph;
    let e = py.detach(|| run_ga(g, &cfg)).map_err(to_py)?;
    Ok((graph.labels(&e.partition), e.fitness))
}

/// Lays out a list of snapshots in sequence; returns one
/// `{node: (x, y)}` dict per snapshot.
#[pyfunction]
#[pyo3(signature = (graphs, mode = "anchored", stiffness = layout::DEFAULT_ANCHOR_STIFFNESS, seed = 0))]
fn layout_sequence(
    graphs: Vec<PyRef<'_, Graph>>,
    mode: &str,
    stiffness: f64,
    seed: u64,
) -> PyResult<Vec<BTreeMap<String, (f64, f64)>>> {
    let mode = match mode {
        "free" => LayoutMode::Free,
        "fixed" => LayoutMode::Fixed,
        "anchored" => LayoutMode::Anchored { stiffness },
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let mut table = NodeTable::new();
    let cfg = LayoutConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prev: Option<LayoutFrame> = None;
    let mut out = Vec::with_capacity(graphs.len());
    for g in &graphs {
        let sg = g.reindexed(&mut table);
        let frame = layout::layout_step(&sg, prev.as_ref(), mode, &cfg, &mut rng).map_err(to_py)?;
        out.push(
            frame
                .positions
                .iter()
                .map(|(&n, &p)| (table.name(n).to_owned(), p))
                .collect(),
        );
        prev = Some(frame);
    }
    Ok(out)
}

/// Generates a planted-partition sequence from a JSON spec string; returns
/// the snapshots and the planted community of every node per snapshot.
#[pyfunction]
fn synth(spec_json: &str) -> PyResult<(Vec<Graph>, Vec<Labels>)> {
    let spec: GeneratorSpec = serde_json::from_str(spec_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let s = generate(&spec).map_err(to_py)?;
    let truth = s
        .truth
        .iter()
        .map(|m| m.iter().map(|(&n, &c)| (s.table.name(n).to_owned(), c)).collect())
        .collect();
    let graphs = s
        .graphs
        .into_iter()
        .map(|graph| Graph {
            graph,
            table: s.table.clone(),
        })
        .collect();
    Ok((graphs, truth))
}

/// Full pipeline over a snapshot directory; returns one report dict per
/// snapshot and algorithm.
#[pyfunction]
#[pyo3(signature = (input_dir, out_dir, algo = "both", mode = "anchored", seed = 0))]
fn run(
    py: Python<'_>,
    input_dir: PathBuf,
    out_dir: PathBuf,
    algo: &str,
    mode: &str,
    seed: u64,
) -> PyResult<Vec<BTreeMap<String, Py<PyAny>>>> {
    let algorithm = match algo {
        "dyci" => AlgorithmChoice::Dyci,
        "ga" => AlgorithmChoice::Ga,
        "both" => AlgorithmChoice::Both,
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    };
    let layout_mode = match mode {
        "free" => LayoutMode::Free,
        "fixed" => LayoutMode::Fixed,
        "anchored" => LayoutMode::anchored(),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let cfg = RunConfig {
        algorithm,
        layout_mode,
        seed,
        ..RunConfig::new(input_dir, out_dir)
    };
    let summary = py.detach(|| pipeline::run(&cfg)).map_err(to_py)?;
    summary
        .reports
        .iter()
        .map(|r| {
            let mut row = BTreeMap::new();
            row.insert("t".to_owned(), r.t.into_pyobject(py)?.into_any().unbind());
            row.insert(
                "algorithm".to_owned(),
                r.algorithm.to_string().into_pyobject(py)?.into_any().unbind(),
            );
            row.insert(
                "modularity".to_owned(),
                r.modularity.into_pyobject(py)?.into_any().unbind(),
            );
            row.insert(
                "communities".to_owned(),
                r.community_count.into_pyobject(py)?.into_any().unbind(),
            );
            row.insert(
                "elapsed_ms".to_owned(),
                r.elapsed_ms().into_pyobject(py)?.into_any().unbind(),
            );
            Ok(row)
        })
        .collect()
}

#[pymodule]
fn dyntrack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Tracker>()?;
    m.add_function(wrap_pyfunction!(seed_partition, m)?)?;
    m.add_function(wrap_pyfunction!(modularity, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(layout_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
