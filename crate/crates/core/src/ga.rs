//! Genetic algorithm baseline over locus-based adjacency chromosomes.
//!
//! Gene `i` holds either `i` itself or one of node `i`'s neighbours; the
//! communities of a chromosome are the connected components of the links
//! `i -- genes[i]`. Crossover and mutation only ever copy or draw alleles
//! from those sets, so every individual stays feasible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NodeId, SnapshotGraph, Weight};
use crate::partition::{CommunityId, Partition};
use crate::unionfind::UnionFind;

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub elite_fraction: f64,
    pub generations: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            crossover_prob: 0.9,
            mutation_prob: 0.1,
            elite_fraction: 0.20,
            generations: 50,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} = {p} is not in [0, 1]")))
            }
        };
        prob("crossover probability", self.crossover_prob)?;
        prob("mutation probability", self.mutation_prob)?;
        prob("elite fraction", self.elite_fraction)?;
        if self.population_size < 2 {
            return Err(Error::InvalidConfig("population size must be at least 2".into()));
        }
        Ok(())
    }

    /// Size of the parent pool at the top of the sorted population.
    pub fn elite_count(&self) -> usize {
        ((self.population_size as f64 * self.elite_fraction).round() as usize).clamp(1, self.population_size)
    }
}

/// Positional view of a snapshot: node `i` of the chromosome is the `i`-th
/// node of the graph in id order.
#[derive(Clone, Debug)]
pub struct LocusGraph {
    nodes: Vec<NodeId>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize, Weight)>,
    total: Weight,
}

impl LocusGraph {
    pub fn new(g: &SnapshotGraph) -> Self {
        let nodes: Vec<NodeId> = g.nodes().collect();
        let position = |n: NodeId| nodes.binary_search(&n).expect("neighbour is a node");
        let neighbors: Vec<Vec<usize>> = nodes
            .iter()
            .map(|&n| g.neighbors(n).map(|(j, _)| position(j)).collect())
            .collect();
        let edges: Vec<_> = g.edges().map(|(a, b, w)| (position(a), position(b), w)).collect();
        let total = edges.iter().map(|e| e.2).sum();
        Self {
            nodes,
            neighbors,
            edges,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, locus: usize) -> NodeId {
        self.nodes[locus]
    }

    /// Neighbour positions of `locus`, ascending.
    pub fn neighbors(&self, locus: usize) -> &[usize] {
        &self.neighbors[locus]
    }

    /// Number of admissible alleles at `locus`: itself plus its neighbours.
    pub fn allele_count(&self, locus: usize) -> usize {
        self.neighbors[locus].len() + 1
    }

    fn allele(&self, locus: usize, k: usize) -> usize {
        if k == 0 {
            locus
        } else {
            self.neighbors[locus][k - 1]
        }
    }

    pub fn admits(&self, locus: usize, allele: usize) -> bool {
        allele == locus || self.neighbors[locus].binary_search(&allele).is_ok()
    }

    fn random_allele<R: Rng + ?Sized>(&self, locus: usize, rng: &mut R) -> usize {
        self.allele(locus, rng.random_range(0..self.allele_count(locus)))
    }

    /// Modularity of the labelling `labels[locus]`.
    pub fn modularity(&self, labels: &[usize]) -> Result<f64> {
        if self.total <= 0.0 {
            return Err(Error::EmptyGraph);
        }
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut intra = vec![0.0; k];
        let mut volume = vec![0.0; k];
        for &(a, b, w) in &self.edges {
            volume[labels[a]] += w;
            volume[labels[b]] += w;
            if labels[a] == labels[b] {
                intra[labels[a]] += w;
            }
        }
        let two_m = 2.0 * self.total;
        let covered: f64 = intra.iter().sum::<f64>() / self.total;
        let expected: f64 = volume.iter().map(|d| (d / two_m).powi(2)).sum();
        Ok(covered - expected)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Chromosome {
    genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Self {
        Self { genes }
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Each gene drawn uniformly from its allele set.
    pub fn random<R: Rng + ?Sized>(lg: &LocusGraph, rng: &mut R) -> Self {
        Self {
            genes: (0..lg.len()).map(|i| lg.random_allele(i, rng)).collect(),
        }
    }

    pub fn check_feasible(&self, lg: &LocusGraph) -> Result<()> {
        if self.genes.len() != lg.len() {
            return Err(Error::LengthMismatch(self.genes.len(), lg.len()));
        }
        match self.genes.iter().enumerate().find(|&(i, &a)| !lg.admits(i, a)) {
            Some((locus, &allele)) => Err(Error::InfeasibleChromosome { locus, allele }),
            None => Ok(()),
        }
    }

    /// Community label per locus, numbered by first appearance.
    pub fn labels(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.genes.len());
        for (i, &a) in self.genes.iter().enumerate() {
            uf.union(i, a);
        }
        uf.labels()
    }

    /// A chromosome decoding to `p`, built from a BFS spanning tree of each
    /// community. Fails if some community is not connected in `g`.
    pub fn encode(g: &SnapshotGraph, p: &Partition) -> Result<Self> {
        let lg = LocusGraph::new(g);
        let mut genes: Vec<Option<usize>> = vec![None; lg.len()];
        for (c, members) in p.communities() {
            let loci: Vec<usize> = members
                .iter()
                .map(|&n| {
                    lg.nodes
                        .binary_search(&n)
                        .map_err(|_| Error::PartitionMismatch(format!("{n} is not in the graph")))
                })
                .collect::<Result<_>>()?;
            let root = loci[0];
            genes[root] = Some(root);
            let mut queue = std::collections::VecDeque::from([root]);
            let mut reached = 1;
            while let Some(i) = queue.pop_front() {
                for &j in lg.neighbors(i) {
                    if genes[j].is_none() && p.community_of(lg.node(j)) == Some(c) {
                        genes[j] = Some(i);
                        reached += 1;
                        queue.push_back(j);
                    }
                }
            }
            if reached != loci.len() {
                return Err(Error::PartitionMismatch(format!("community {c} is not connected")));
            }
        }
        let genes = genes
            .into_iter()
            .enumerate()
            .map(|(i, g)| g.ok_or_else(|| Error::PartitionMismatch(format!("{} has no community", lg.node(i)))))
            .collect::<Result<_>>()?;
        Ok(Self { genes })
    }
}

/// Partition whose communities are the components of the gene links.
pub fn decode(ch: &Chromosome, g: &SnapshotGraph) -> Result<Partition> {
    let lg = LocusGraph::new(g);
    ch.check_feasible(&lg)?;
    partition_from_labels(g, &lg, &ch.labels())
}

fn partition_from_labels(g: &SnapshotGraph, lg: &LocusGraph, labels: &[usize]) -> Result<Partition> {
    Partition::from_assignment(
        g,
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (lg.node(i), CommunityId(l as u32))),
    )
}

/// Takes every gene from `p1` or `p2` with equal probability.
pub fn uniform_crossover<R: Rng + ?Sized>(p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> Result<Chromosome> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch(p1.len(), p2.len()));
    }
    let genes = p1
        .genes
        .iter()
        .zip(&p2.genes)
        .map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b })
        .collect();
    Ok(Chromosome { genes })
}

/// Redraws each gene from its allele set with probability `prob`.
pub fn mutate<R: Rng + ?Sized>(ch: &Chromosome, lg: &LocusGraph, prob: f64, rng: &mut R) -> Chromosome {
    let genes = ch
        .genes
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if prob > 0.0 && rng.random_bool(prob) {
                lg.random_allele(i, rng)
            } else {
                a
            }
        })
        .collect();
    Chromosome { genes }
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub partition: Partition,
    pub fitness: f64,
    pub best: Chromosome,
    /// Best fitness after initialisation and after each generation.
    pub history: Vec<f64>,
}

/// An individual and its fitness.
pub type Scored = (Chromosome, f64);

/// Runs the steady-state loop and returns the best individual found.
pub fn evolve(g: &SnapshotGraph, cfg: &GaConfig) -> Result<Evolution> {
    evolve_observed(g, cfg, |_, _| {})
}

/// As [`evolve`], calling `observe(generation, population)` after
/// initialisation (generation 0) and after every generation. The population
/// is sorted by decreasing fitness.
pub fn evolve_observed(
    g: &SnapshotGraph,
    cfg: &GaConfig,
    mut observe: impl FnMut(usize, &[Scored]),
) -> Result<Evolution> {
    cfg.validate()?;
    let lg = LocusGraph::new(g);
    if lg.is_empty() || lg.total <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let score = |ch: &Chromosome| lg.modularity(&ch.labels()).expect("graph has edges");

    let mut population: Vec<Scored> = (0..cfg.population_size)
        .map(|_| {
            let ch = Chromosome::random(&lg, &mut rng);
            let f = score(&ch);
            (ch, f)
        })
        .collect();
    population.sort_by(|a, b| b.1.total_cmp(&a.1));
    observe(0, &population);

    let elite = cfg.elite_count();
    let mut history = vec![population[0].1];
    for generation in 1..=cfg.generations {
        for _ in 0..cfg.population_size {
            let p1 = &population[rng.random_range(0..elite)].0;
            let p2 = &population[rng.random_range(0..elite)].0;
            let child = if rng.random_bool(cfg.crossover_prob) {
                uniform_crossover(p1, p2, &mut rng)?
            } else {
                p1.clone()
            };
            let child = mutate(&child, &lg, cfg.mutation_prob, &mut rng);
            let f = score(&child);
            // After all individuals at least as fit, then drop the weakest.
            let at = population.partition_point(|(_, other)| *other >= f);
            population.insert(at, (child, f));
            population.pop();
        }
        history.push(population[0].1);
        observe(generation, &population);
    }

    let (best, fitness) = population.swap_remove(0);
    let partition = partition_from_labels(g, &lg, &best.labels())?;
    Ok(Evolution {
        partition,
        fitness,
        best,
        history,
    })
}
