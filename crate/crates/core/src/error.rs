use std::path::PathBuf;

use crate::graph::UpdateClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("inconsistent update in {class}: {entry}: {reason}")]
    InconsistentUpdate {
        class: UpdateClass,
        entry: String,
        reason: &'static str,
    },
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("node {0} has zero weighted degree")]
    ZeroDegree(String),
    #[error("unknown community {0}")]
    UnknownCommunity(String),
    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(String, String, &'static str),
    #[error("chromosome is infeasible at locus {locus} (allele {allele})")]
    InfeasibleChromosome { locus: usize, allele: usize },
    #[error("chromosome lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("partition does not match the graph: {0}")]
    PartitionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid snapshot sequence: {0}")]
    InvalidSequence(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
