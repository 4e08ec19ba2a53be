//! End-to-end run over a snapshot directory: ingest, diff, detect, measure,
//! lay out and export.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! reports.csv                one row per snapshot and algorithm
//! dyci/partition_{t}.csv     when Dyci runs
//! ga/partition_{t}.csv       when the GA runs
//! frames.json                layout frames coloured by Dyci (GA if alone)
//! ```

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dyci::Dyci;
use crate::error::{Error, Result};
use crate::ga::{evolve, GaConfig};
use crate::graph::{diff_snapshots, SnapshotGraph};
use crate::io::{format_partition, partition_path, read_sequence};
use crate::layout::{
    annotate, layout_step, FrameRecord, FramesDocument, LayoutConfig, LayoutFrame, LayoutMode, PresenceTracker,
};
use crate::metrics::{format_reports, report, sequence_averages, Algorithm, SequenceAverages, SnapshotReport};
use crate::partition::Partition;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum AlgorithmChoice {
    Dyci,
    Ga,
    Both,
}

impl AlgorithmChoice {
    pub fn runs(self, a: Algorithm) -> bool {
        matches!(
            (self, a),
            (AlgorithmChoice::Both, _)
                | (AlgorithmChoice::Dyci, Algorithm::Dyci)
                | (AlgorithmChoice::Ga, Algorithm::Ga)
        )
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub algorithm: AlgorithmChoice,
    pub layout_mode: LayoutMode,
    pub layout: LayoutConfig,
    /// `rng_seed` is ignored; each snapshot gets a seed derived from `seed`.
    pub ga: GaConfig,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(input_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_dir: input_dir.into(),
            algorithm: AlgorithmChoice::Both,
            layout_mode: LayoutMode::anchored(),
            layout: LayoutConfig::default(),
            ga: GaConfig::default(),
            out_dir: out_dir.into(),
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub reports: Vec<SnapshotReport>,
    pub averages: Vec<SequenceAverages>,
    pub frames: FramesDocument,
    /// Snapshots whose layout hit the iteration cap.
    pub unconverged: Vec<usize>,
}

/// GA seed for snapshot `t`.
pub fn ga_seed(seed: u64, t: usize) -> u64 {
    let mut z = seed ^ (t as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.ga.validate()?;
    cfg.layout_mode.validate()?;
    let (graphs, table) = read_sequence(&cfg.input_dir)?;
    if let Some(g) = graphs.iter().find(|g| g.edge_count() == 0) {
        return Err(Error::InvalidSequence(format!(
            "snapshot_{}.edges has no edges; modularity is undefined",
            g.t()
        )));
    }

    let dyci_dir = cfg.out_dir.join("dyci");
    let ga_dir = cfg.out_dir.join("ga");
    fs::create_dir_all(&cfg.out_dir)?;
    if cfg.algorithm.runs(Algorithm::Dyci) {
        fs::create_dir_all(&dyci_dir)?;
    }
    if cfg.algorithm.runs(Algorithm::Ga) {
        fs::create_dir_all(&ga_dir)?;
    }

    let mut reports = Vec::new();
    let mut tracker: Option<Dyci> = None;
    let mut prev_graph: Option<&SnapshotGraph> = None;
    let mut prev_frame: Option<LayoutFrame> = None;
    let mut history = PresenceTracker::new();
    let mut layout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut frames = Vec::with_capacity(graphs.len());
    let mut unconverged = Vec::new();

    for g in &graphs {
        let t = g.t();
        let mut shown: Option<Partition> = None;

        if cfg.algorithm.runs(Algorithm::Dyci) {
            let (p, elapsed) = match (tracker.as_mut(), prev_graph) {
                (Some(d), Some(prev)) => {
                    let u = diff_snapshots(prev, g);
                    let start = Instant::now();
                    d.step(&u)?;
                    let elapsed = start.elapsed();
                    (d.partition().clone(), elapsed)
                }
                _ => {
                    let start = Instant::now();
                    let d = Dyci::new(g.clone());
                    let elapsed = start.elapsed();
                    let p = d.partition().clone();
                    tracker = Some(d);
                    (p, elapsed)
                }
            };
            reports.push(report(g, &p, elapsed, Algorithm::Dyci)?);
            fs::write(partition_path(&dyci_dir, t), format_partition(&p, &table))?;
            shown = Some(p);
        }

        if cfg.algorithm.runs(Algorithm::Ga) {
            let ga = GaConfig {
                rng_seed: ga_seed(cfg.seed, t),
                ..cfg.ga.clone()
            };
            let start = Instant::now();
            let evolution = evolve(g, &ga)?;
            let elapsed = start.elapsed();
            reports.push(report(g, &evolution.partition, elapsed, Algorithm::Ga)?);
            fs::write(
                partition_path(&ga_dir, t),
                format_partition(&evolution.partition, &table),
            )?;
            shown.get_or_insert(evolution.partition);
        }

        history.observe(g);
        let frame = layout_step(g, prev_frame.as_ref(), cfg.layout_mode, &cfg.layout, &mut layout_rng)?;
        if !frame.converged {
            unconverged.push(t);
        }
        let frame = annotate(frame, shown.as_ref().expect("at least one algorithm runs"), &history)?;
        frames.push(FrameRecord::from_frame(&frame, &table)?);
        prev_frame = Some(frame);
        prev_graph = Some(g);
    }

    fs::write(cfg.out_dir.join("reports.csv"), format_reports(&reports))?;
    let frames = FramesDocument { frames };
    fs::write(cfg.out_dir.join("frames.json"), serde_json::to_string(&frames)?)?;
    Ok(RunSummary {
        averages: sequence_averages(&reports),
        reports,
        frames,
        unconverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ChurnRates, GeneratorSpec};

    fn write_sequence(dir: &std::path::Path, snapshots: usize) {
        let spec = GeneratorSpec {
            nodes: 40,
            communities: 4,
            p_in: 0.4,
            p_out: 0.02,
            w_in: (1, 5),
            w_out: (1, 2),
            snapshots,
            churn: ChurnRates::uniform(0.05),
            seed: 2,
        };
        generate(&spec).unwrap().write(dir).unwrap();
    }

    fn quick(input: &std::path::Path, out: &std::path::Path) -> RunConfig {
        RunConfig {
            ga: GaConfig {
                population_size: 20,
                generations: 5,
                ..Default::default()
            },
            ..RunConfig::new(input, out)
        }
    }

    #[test]
    fn single_snapshot_dyci_gives_one_row() {
        let input = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_sequence(input.path(), 1);
        let cfg = RunConfig {
            algorithm: AlgorithmChoice::Dyci,
            ..quick(input.path(), out.path())
        };
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.reports.len(), 1);
        let csv = fs::read_to_string(out.path().join("reports.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(out.path().join("dyci/partition_0.csv").exists());
        assert!(!out.path().join("ga").exists());
    }

    #[test]
    fn both_algorithms_write_everything() {
        let input = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_sequence(input.path(), 3);
        let summary = run(&quick(input.path(), out.path())).unwrap();
        assert_eq!(summary.reports.len(), 6);
        assert_eq!(summary.averages.len(), 2);
        assert_eq!(summary.frames.frames.len(), 3);
        for t in 0..3 {
            assert!(out.path().join(format!("dyci/partition_{t}.csv")).exists());
            assert!(out.path().join(format!("ga/partition_{t}.csv")).exists());
        }
        let text = fs::read_to_string(out.path().join("frames.json")).unwrap();
        let back: FramesDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, summary.frames);
    }

    #[test]
    fn edgeless_snapshot_is_rejected() {
        let input = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        fs::write(input.path().join("snapshot_0.edges"), "a,b,1\n").unwrap();
        fs::write(input.path().join("snapshot_1.edges"), "a,,\n").unwrap();
        assert!(matches!(
            run(&quick(input.path(), out.path())),
            Err(Error::InvalidSequence(_))
        ));
    }

    #[test]
    fn ga_seeds_differ_per_snapshot() {
        assert_ne!(ga_seed(1, 0), ga_seed(1, 1));
        assert_ne!(ga_seed(1, 0), ga_seed(2, 0));
        assert_eq!(ga_seed(5, 3), ga_seed(5, 3));
    }
}
