mod common;

use std::collections::BTreeMap;

use dyntrack_core::dyci::Dyci;
use dyntrack_core::graph::diff_snapshots;
use dyntrack_core::layout::{
    annotate, layout_step, mean_displacement, LayoutConfig, LayoutFrame, LayoutMode, PresenceTracker,
};
use dyntrack_core::synth::{generate, ChurnRates, GeneratorSpec};
use dyntrack_core::{NodeId, SnapshotGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn churned(seed: u64, churn: ChurnRates, snapshots: usize) -> Vec<SnapshotGraph> {
    let spec = GeneratorSpec {
        nodes: 50,
        communities: 5,
        p_in: 0.3,
        p_out: 0.03,
        w_in: (1, 5),
        w_out: (1, 2),
        snapshots,
        churn,
        seed,
    };
    generate(&spec).unwrap().graphs
}

fn edge_churn() -> ChurnRates {
    ChurnRates {
        edge_remove: 0.1,
        edge_add: 0.1,
        ..Default::default()
    }
}

fn lay_out(graphs: &[SnapshotGraph], mode: LayoutMode, seed: u64) -> Vec<LayoutFrame> {
    let cfg = LayoutConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames: Vec<LayoutFrame> = Vec::new();
    for g in graphs {
        let frame = layout_step(g, frames.last(), mode, &cfg, &mut rng).unwrap();
        frames.push(frame);
    }
    frames
}

#[test]
fn stiffer_anchors_move_nodes_less() {
    for seed in 0..5 {
        let graphs = churned(seed, edge_churn(), 2);
        let first = lay_out(&graphs[..1], LayoutMode::Free, seed).pop().unwrap();
        let moved: Vec<f64> = [0.5, 5.0, 50.0, 500.0]
            .iter()
            .map(|&stiffness| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let next = layout_step(
                    &graphs[1],
                    Some(&first),
                    LayoutMode::Anchored { stiffness },
                    &LayoutConfig::default(),
                    &mut rng,
                )
                .unwrap();
                mean_displacement(&first, &next).unwrap()
            })
            .collect();
        assert!(moved.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {moved:?}");
        assert!(moved[3] < 0.1 * moved[0], "seed {seed}: {moved:?}");
    }
}

#[test]
fn fixed_mode_pins_survivors_under_node_churn() {
    let graphs = churned(3, ChurnRates::uniform(0.1), 5);
    let frames = lay_out(&graphs, LayoutMode::Fixed, 3);
    for w in frames.windows(2) {
        for (n, p) in &w[1].positions {
            if let Some(q) = w[0].positions.get(n) {
                assert_eq!(p, q);
            }
        }
    }
}

#[test]
fn presence_and_initial_flags_follow_history() {
    let graphs = churned(8, ChurnRates::uniform(0.2), 6);
    let frames = lay_out(&graphs, LayoutMode::anchored(), 8);
    let mut tracker = Dyci::new(graphs[0].clone());
    let mut history = PresenceTracker::new();
    let mut last_presence: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut initial: BTreeMap<NodeId, bool> = BTreeMap::new();
    for (t, (g, frame)) in graphs.iter().zip(frames).enumerate() {
        if t > 0 {
            tracker.step(&diff_snapshots(&graphs[t - 1], g)).unwrap();
        }
        history.observe(g);
        let frame = annotate(frame, tracker.partition(), &history).unwrap();
        for n in g.nodes() {
            let seen = frame.presence[&n];
            match last_presence.get(&n) {
                Some(&before) => assert!(seen > before),
                None => assert_eq!(seen, 1),
            }
            last_presence.insert(n, seen);
            let flag = frame.initial[&n];
            assert_eq!(*initial.entry(n).or_insert(flag), flag);
            assert_eq!(flag, graphs[0].contains_node(n));
            assert_eq!(frame.community_of[&n], tracker.partition().community_of(n).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn frames_cover_exactly_the_snapshot(graphs in prop::collection::vec(common::graph(15, 30), 3), seed in any::<u64>()) {
        for mode in [LayoutMode::Free, LayoutMode::Fixed, LayoutMode::anchored()] {
            let frames = lay_out(&graphs, mode, seed);
            for (g, f) in graphs.iter().zip(&frames) {
                prop_assert!(f.positions.keys().copied().eq(g.nodes()));
                prop_assert!(f.positions.values().all(|p| p.0.is_finite() && p.1.is_finite()));
                prop_assert_eq!(f.edges.len(), g.edge_count());
            }
        }
    }

    #[test]
    fn layout_is_deterministic(graphs in prop::collection::vec(common::graph(12, 25), 3), seed in any::<u64>()) {
        for mode in [LayoutMode::Free, LayoutMode::Fixed, LayoutMode::anchored()] {
            prop_assert_eq!(lay_out(&graphs, mode, seed), lay_out(&graphs, mode, seed));
        }
    }
}
