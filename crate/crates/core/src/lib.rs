//! Community tracking for edge-weighted dynamic graphs.
//!
//! The crate is organised around a sequence of [`SnapshotGraph`]s linked by
//! [`UpdateSet`]s. [`dyci`] keeps a [`Partition`] up to date across the
//! sequence without re-detecting from scratch, [`ga`] is a modularity-driven
//! genetic algorithm used as a quality baseline, [`layout`] produces stable
//! force-directed coordinates for each snapshot, and [`pipeline`] ties the
//! pieces together behind the `dyntrack` command line.

pub mod dyci;
pub mod error;
pub mod ga;
pub mod graph;
pub mod io;
pub mod layout;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod synth;
mod unionfind;

pub use error::{Error, Result};
pub use graph::{NodeAddition, NodeId, NodeTable, SnapshotGraph, UpdateClass, UpdateSet, Weight};
pub use partition::{CommunityId, Partition};
