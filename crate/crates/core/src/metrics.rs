//! Modularity, community counts and per-snapshot timing.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{SnapshotGraph, Weight};
use crate::partition::{CommunityId, Partition};

/// Newman modularity of `p` on the weighted graph `g`.
///
/// The double sum over ordered node pairs reduces to a per-community form:
/// `sum_c IW_c / M - (D_c / 2M)^2`, with `D_c` the summed weighted degree of
/// community `c`. Self-pairs contribute to the second term only.
pub fn modularity(g: &SnapshotGraph, p: &Partition) -> Result<f64> {
    let m = g.total_weight();
    if m <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    if p.node_count() != g.node_count() {
        return Err(Error::PartitionMismatch(format!(
            "partition has {} nodes, graph has {}",
            p.node_count(),
            g.node_count()
        )));
    }
    let mut intra: BTreeMap<CommunityId, Weight> = BTreeMap::new();
    let mut volume: BTreeMap<CommunityId, Weight> = BTreeMap::new();
    for n in g.nodes() {
        let c = p
            .community_of(n)
            .ok_or_else(|| Error::PartitionMismatch(format!("{n} has no community")))?;
        for (j, w) in g.neighbors(n) {
            *volume.entry(c).or_insert(0.0) += w;
            if n < j && p.community_of(j) == Some(c) {
                *intra.entry(c).or_insert(0.0) += w;
            }
        }
    }
    let covered: Weight = intra.values().sum::<Weight>() / m;
    let expected: f64 = volume.values().map(|d| (d / (2.0 * m)).powi(2)).sum();
    Ok(covered - expected)
}

/// Which detector produced a report.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dyci,
    Ga,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Dyci => "dyci",
            Algorithm::Ga => "ga",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotReport {
    pub t: usize,
    pub algorithm: Algorithm,
    pub modularity: f64,
    pub community_count: usize,
    pub elapsed: Duration,
}

impl SnapshotReport {
    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed.as_secs_f64() * 1e3
    }
}

pub fn report(g: &SnapshotGraph, p: &Partition, elapsed: Duration, algorithm: Algorithm) -> Result<SnapshotReport> {
    Ok(SnapshotReport {
        t: g.t(),
        algorithm,
        modularity: modularity(g, p)?,
        community_count: p.community_count(),
        elapsed,
    })
}

/// Unweighted means over a run of snapshots.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceAverages {
    pub algorithm: Algorithm,
    pub snapshots: usize,
    pub modularity: f64,
    pub community_count: f64,
    pub elapsed_ms: f64,
}

/// Averages for each algorithm present in `reports`, in algorithm order.
pub fn sequence_averages(reports: &[SnapshotReport]) -> Vec<SequenceAverages> {
    let mut groups: BTreeMap<Algorithm, Vec<&SnapshotReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.algorithm).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(algorithm, rs)| {
            let k = rs.len() as f64;
            SequenceAverages {
                algorithm,
                snapshots: rs.len(),
                modularity: rs.iter().map(|r| r.modularity).sum::<f64>() / k,
                community_count: rs.iter().map(|r| r.community_count as f64).sum::<f64>() / k,
                elapsed_ms: rs.iter().map(|r| r.elapsed_ms()).sum::<f64>() / k,
            }
        })
        .collect()
}

pub const REPORTS_HEADER: &str = "t,algorithm,modularity,communities,elapsed_ms";

pub fn format_reports(reports: &[SnapshotReport]) -> String {
    let mut out = String::from(REPORTS_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.3}",
            r.t,
            r.algorithm,
            r.modularity,
            r.community_count,
            r.elapsed_ms()
        );
    }
    out
}
