mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use dyntrack_core::ga::{decode, evolve, evolve_observed, mutate, uniform_crossover, Chromosome, GaConfig, LocusGraph};
use dyntrack_core::metrics::modularity;
use dyntrack_core::{NodeId, SnapshotGraph};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_chromosome(g: &SnapshotGraph, seed: u64) -> Chromosome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Chromosome::random(&LocusGraph::new(g), &mut rng)
}

/// Components of the gene-link graph by breadth-first search.
fn bfs_groups(g: &SnapshotGraph, ch: &Chromosome) -> Vec<Vec<u32>> {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let mut links: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, &a) in ch.genes().iter().enumerate() {
        links[i].push(a);
        links[a].push(i);
    }
    let mut seen = vec![false; nodes.len()];
    let mut out = Vec::new();
    for s in 0..nodes.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![nodes[s].0];
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for &j in &links[i] {
                if !seen[j] {
                    seen[j] = true;
                    comp.push(nodes[j].0);
                    queue.push_back(j);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out.sort();
    out
}

/// Best modularity over every set partition of the nodes.
fn exhaustive_best(g: &SnapshotGraph) -> f64 {
    let nodes: Vec<NodeId> = g.nodes().collect();
    let mut best = f64::NEG_INFINITY;
    let mut labels = vec![0u32; nodes.len()];
    fn walk(i: usize, next: u32, labels: &mut Vec<u32>, nodes: &[NodeId], g: &SnapshotGraph, best: &mut f64) {
        if i == nodes.len() {
            let map: BTreeMap<NodeId, u32> = nodes.iter().copied().zip(labels.iter().copied()).collect();
            *best = best.max(common::brute_modularity(g, &map));
            return;
        }
        for l in 0..=next {
            labels[i] = l;
            walk(i + 1, next.max(l + 1), labels, nodes, g, best);
        }
    }
    walk(0, 0, &mut labels, &nodes, g, &mut best);
    best
}

#[test]
fn crossover_takes_each_parent_half_the_time() {
    let n = 20;
    let p1 = Chromosome::new((0..n).collect());
    let p2 = Chromosome::new((0..n).map(|i| (i + 1) % n).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trials = 10_000;
    let mut from_p1 = vec![0u32; n];
    for _ in 0..trials {
        let child = uniform_crossover(&p1, &p2, &mut rng).unwrap();
        for (i, &a) in child.genes().iter().enumerate() {
            assert!(a == p1.genes()[i] || a == p2.genes()[i]);
            if a == p1.genes()[i] {
                from_p1[i] += 1;
            }
        }
    }
    for (i, &c) in from_p1.iter().enumerate() {
        let f = c as f64 / trials as f64;
        assert!((f - 0.5).abs() <= 0.02, "locus {i}: {f}");
    }
}

#[test]
fn full_mutation_redraws_uniformly() {
    // On a ring every locus has the same three alleles: itself, left, right.
    let n = 1000u32;
    let mut g = SnapshotGraph::new(0);
    for i in 0..n {
        g.add_edge(NodeId(i), NodeId((i + 1) % n), 1.0).unwrap();
    }
    let lg = LocusGraph::new(&g);
    let start = Chromosome::new((0..n as usize).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mutated = mutate(&start, &lg, 1.0, &mut rng);
    mutated.check_feasible(&lg).unwrap();
    let n = n as usize;
    let mut counts = [0.0f64; 3];
    for (i, &a) in mutated.genes().iter().enumerate() {
        let k = if a == i {
            0
        } else if a == (i + n - 1) % n {
            1
        } else {
            2
        };
        counts[k] += 1.0;
    }
    let expected = n as f64 / 3.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    // 99th percentile of chi-square with 2 degrees of freedom.
    assert!(chi2 < 9.21, "chi-square {chi2} for counts {counts:?}");
}

#[test]
fn two_triangles_are_found() {
    let mut g = SnapshotGraph::new(0);
    for (a, b) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
        g.add_edge(NodeId(a), NodeId(b), 1.0).unwrap();
    }
    let e = evolve(&g, &GaConfig::default()).unwrap();
    assert_eq!(common::groups(&e.partition), vec![vec![0, 1, 2], vec![3, 4, 5]]);
    assert!((e.fitness - 0.5).abs() < 1e-12);
    assert!((modularity(&g, &e.partition).unwrap() - e.fitness).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_modularity_matches_double_loop((g, label) in common::labelled_graph(14, 40)) {
        let q = modularity(&g, &common::partition_of(&g, &label)).unwrap();
        prop_assert!((q - common::brute_modularity(&g, &label)).abs() < 1e-9);
        prop_assert!((-0.5 - 1e-12..=1.0).contains(&q));
    }

    #[test]
    fn decode_matches_bfs_components(g in common::graph(20, 50), seed in any::<u64>()) {
        let ch = random_chromosome(&g, seed);
        let p = decode(&ch, &g).unwrap();
        prop_assert_eq!(common::groups(&p), bfs_groups(&g, &ch));
        prop_assert!(common::caches_match(&g, &p));
    }

    #[test]
    fn locus_fitness_agrees_with_metrics(g in common::graph(16, 40).prop_filter("edges", |g| g.edge_count() > 0), seed in any::<u64>()) {
        let ch = random_chromosome(&g, seed);
        let lg = LocusGraph::new(&g);
        let direct = lg.modularity(&ch.labels()).unwrap();
        let via_partition = modularity(&g, &decode(&ch, &g).unwrap()).unwrap();
        prop_assert!((direct - via_partition).abs() < 1e-12);
    }

    #[test]
    fn encode_then_decode_is_identity((g, label) in common::labelled_graph(14, 40)) {
        // Split every label class into its connected pieces so it is expressible.
        let mut refined = BTreeMap::new();
        let mut next = 0u32;
        let mut seen = BTreeSet::new();
        for s in g.nodes() {
            if !seen.insert(s) {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                refined.insert(i, next);
                for (j, _) in g.neighbors(i) {
                    if label[&j] == label[&s] && seen.insert(j) {
                        queue.push_back(j);
                    }
                }
            }
            next += 1;
        }
        let p = common::partition_of(&g, &refined);
        let ch = Chromosome::encode(&g, &p).unwrap();
        ch.check_feasible(&LocusGraph::new(&g)).unwrap();
        prop_assert!(decode(&ch, &g).unwrap().same_grouping(&p));
    }

    #[test]
    fn mutation_and_crossover_stay_feasible(g in common::graph(20, 50), seed in any::<u64>(), pm in 0.0..=1.0f64) {
        let lg = LocusGraph::new(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Chromosome::random(&lg, &mut rng);
        let b = Chromosome::random(&lg, &mut rng);
        let child = mutate(&uniform_crossover(&a, &b, &mut rng).unwrap(), &lg, pm, &mut rng);
        prop_assert!(child.check_feasible(&lg).is_ok());
        prop_assert_eq!(mutate(&a, &lg, 0.0, &mut rng), a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn six_node_optimum_is_reached(g in common::graph(6, 12).prop_filter("edges", |g| g.edge_count() > 0), seed in any::<u64>()) {
        let e = evolve(&g, &GaConfig { rng_seed: seed, ..Default::default() }).unwrap();
        prop_assert!((e.fitness - exhaustive_best(&g)).abs() < 1e-9);
    }

    #[test]
    fn evolution_invariants(g in common::graph(25, 60).prop_filter("edges", |g| g.edge_count() > 0), seed in any::<u64>()) {
        let cfg = GaConfig { population_size: 30, generations: 15, rng_seed: seed, ..Default::default() };
        let lg = LocusGraph::new(&g);
        let mut sizes = Vec::new();
        let mut feasible = true;
        let mut sorted = true;
        let e = evolve_observed(&g, &cfg, |_, pop| {
            sizes.push(pop.len());
            feasible &= pop.iter().all(|(ch, _)| ch.check_feasible(&lg).is_ok());
            sorted &= pop.windows(2).all(|w| w[0].1 >= w[1].1);
        })
        .unwrap();
        prop_assert_eq!(sizes, vec![30; 16]);
        prop_assert!(feasible && sorted);
        prop_assert_eq!(e.history.len(), 16);
        prop_assert!(e.history.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*e.history.last().unwrap(), e.fitness);

        let again = evolve(&g, &cfg).unwrap();
        prop_assert_eq!(again.best, e.best);
        prop_assert_eq!(again.fitness.to_bits(), e.fitness.to_bits());
    }
}

#[test]
fn different_seeds_explore_differently() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut g = SnapshotGraph::new(0);
    for a in 0..40u32 {
        for b in (a + 1)..40 {
            if rng.random_bool(0.15) {
                g.add_edge(NodeId(a), NodeId(b), rng.random_range(1..=5u32) as f64)
                    .unwrap();
            }
        }
    }
    let cfg = GaConfig {
        generations: 2,
        ..Default::default()
    };
    let a = evolve(
        &g,
        &GaConfig {
            rng_seed: 1,
            ..cfg.clone()
        },
    )
    .unwrap();
    let b = evolve(&g, &GaConfig { rng_seed: 2, ..cfg }).unwrap();
    assert_ne!(a.best, b.best);
}
