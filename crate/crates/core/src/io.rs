//! Snapshot files (`src,dst,weight`), snapshot directories and partition CSVs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{NodeTable, SnapshotGraph};
use crate::partition::Partition;

/// Parses one snapshot. Directed lines `a,b` and `b,a` are summed into one
/// undirected edge; `id,,` declares an isolated node.
pub fn parse_snapshot(text: &str, t: usize, table: &mut NodeTable, path: &Path) -> Result<SnapshotGraph> {
    let mut g = SnapshotGraph::new(t);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!(
                "expected 3 comma-separated fields, found {}",
                fields.len()
            )));
        }
        if fields[0].is_empty() {
            return Err(err("empty source node id".into()));
        }
        if fields[1].is_empty() && fields[2].is_empty() {
            let n = table.intern(fields[0]);
            g.add_node(n);
            continue;
        }
        if fields[1].is_empty() {
            return Err(err("empty destination node id".into()));
        }
        let w: u64 = fields[2]
            .parse()
            .map_err(|_| err(format!("weight {:?} is not a non-negative integer", fields[2])))?;
        if w == 0 {
            return Err(err("weight must be positive".into()));
        }
        if fields[0] == fields[1] {
            return Err(err(format!("self-loop on {}", fields[0])));
        }
        let a = table.intern(fields[0]);
        let b = table.intern(fields[1]);
        let total = g.weight(a, b).unwrap_or(0.0) + w as f64;
        g.add_edge(a, b, total).map_err(|e| err(e.to_string()))?;
    }
    Ok(g)
}

pub fn read_snapshot(path: &Path, t: usize, table: &mut NodeTable) -> Result<SnapshotGraph> {
    let text = fs::read_to_string(path)?;
    parse_snapshot(&text, t, table, path)
}

/// Canonical text form: edges once each, lines sorted, isolated nodes as `id,,`.
pub fn format_snapshot(g: &SnapshotGraph, table: &NodeTable) -> String {
    let mut lines: Vec<String> = Vec::with_capacity(g.node_count() + g.edge_count());
    for (a, b, w) in g.edges() {
        let (sa, sb) = (table.name(a), table.name(b));
        let (sa, sb) = if sa <= sb { (sa, sb) } else { (sb, sa) };
        lines.push(format!("{sa},{sb},{w}"));
    }
    for n in g.nodes().filter(|&n| g.degree(n) == 0) {
        lines.push(format!("{},,", table.name(n)));
    }
    lines.sort();
    let mut out = String::new();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

pub fn snapshot_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("snapshot_{t}.edges"))
}

/// Number of snapshots in `dir`, checking that indices run 0..f without gaps.
pub fn count_snapshots(dir: &Path) -> Result<usize> {
    let mut indices = Vec::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(idx) = name.strip_prefix("snapshot_").and_then(|s| s.strip_suffix(".edges")) {
            let t: usize = idx
                .parse()
                .map_err(|_| Error::InvalidSequence(format!("bad snapshot file name {name}")))?;
            indices.push(t);
        }
    }
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::InvalidSequence(format!(
            "{} contains no snapshot_0.edges",
            dir.display()
        )));
    }
    for (expected, &t) in indices.iter().enumerate() {
        if t != expected {
            return Err(Error::InvalidSequence(format!(
                "snapshot indices are not contiguous: missing snapshot_{expected}.edges"
            )));
        }
    }
    Ok(indices.len())
}

/// Loads a whole snapshot directory with one shared node table.
pub fn read_sequence(dir: &Path) -> Result<(Vec<SnapshotGraph>, NodeTable)> {
    let count = count_snapshots(dir)?;
    let mut table = NodeTable::new();
    let graphs = (0..count)
        .map(|t| read_snapshot(&snapshot_path(dir, t), t, &mut table))
        .collect::<Result<Vec<_>>>()?;
    Ok((graphs, table))
}

/// `nodeid,communityid` per node, sorted by node id.
pub fn format_partition(p: &Partition, table: &NodeTable) -> String {
    let mut rows: Vec<(&str, u32)> = p.membership().map(|(n, c)| (table.name(n), c.0)).collect();
    rows.sort_unstable();
    let mut out = String::new();
    for (name, c) in rows {
        let _ = writeln!(out, "{name},{c}");
    }
    out
}

pub fn partition_path(dir: &Path, t: usize) -> PathBuf {
    dir.join(format!("partition_{t}.csv"))
}
