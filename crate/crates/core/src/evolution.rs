//! The generational loop: fitness, capped fitness-proportional selection,
//! reproduction and the mutation operators.
//!
//! Fitness of an agent over a maze set is
//!     SMR - max_mazes(mean activation) + f_sparsity * sparsity_term
//! where SMR is the squared mean of the square-rooted per-maze distances.
//! The best half of the pool reproduces with probability proportional to
//! (shifted) fitness, capped at 10% per parent. Every agent, survivors
//! included, is then mutated.

use crate::episode::run_episode;
use crate::error::Error;
use crate::maze::Maze;
use crate::network::{sigma_init, Genome};
use crate::rng::{stream, Operator};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-parent reproduction probability ceiling.
pub const REPRODUCTION_CAP: f64 = 0.1;

/// How the sparsity reward in the fitness enters: as a raw count of zero
/// effective weights (commensurate with distance-scale SMR) or as the
/// [0,1] sparsity fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityUnit {
    Count,
    Fraction,
}

/// Which per-maze distance feeds the fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    /// Final x minus start x.
    Final,
    /// Maximum x reached minus start x.
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionParams {
    pub p_disconnect: f64,
    pub p_connect: f64,
    pub f_sparsity: f64,
    pub weight_mutation_on: bool,
    pub connection_mutation_on: bool,
    pub threshold_mutation_on: bool,
    pub sparsity_unit: SparsityUnit,
    pub distance_metric: DistanceMetric,
    /// Actions per episode.
    pub steps: usize,
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<(), Error> {
        for (name, p) in [
            ("p_disconnect", self.p_disconnect),
            ("p_connect", self.p_connect),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {p}")));
            }
        }
        if self.f_sparsity < 0.0 {
            return Err(Error::Config("f_sparsity must be non-negative".into()));
        }
        if self.steps < 1 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub distances: Vec<f64>,
    pub smr: f64,
    /// max over mazes of the episode's mean activation
    pub activation_penalty: f64,
    pub sparsity_term: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Population {
    pub agents: Vec<Genome>,
    pub generation: u64,
    pub master_seed: u64,
}

impl Population {
    /// Fresh pool of fully connected genomes, one init stream per slot.
    pub fn init(
        master_seed: u64,
        size: usize,
        n: usize,
        sigma_mut: f64,
        bias_neuron: bool,
        threshold_mutation_on: bool,
    ) -> Result<Population, Error> {
        if size < 2 {
            return Err(Error::Config("pool size must be at least 2".into()));
        }
        let tau0 = if threshold_mutation_on {
            // A multiplicative mutation cannot escape an exact zero.
            sigma_init(n) / 10.0
        } else {
            0.0
        };
        let agents = (0..size)
            .map(|i| {
                let mut rng = stream(master_seed, 0, i as u64, Operator::Init);
                let mut g = crate::network::init_genome(&mut rng, n, sigma_mut, bias_neuron)?;
                g.tau = tau0;
                Ok(g)
            })
            .collect::<Result<Vec<_>, Error>>()?;
        Ok(Population {
            agents,
            generation: 0,
            master_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetrics {
    pub generation: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    /// Training performance = mean distance over the training mazes.
    pub best_train_perf: f64,
    pub mean_train_perf: f64,
    pub mean_sparsity: f64,
    pub mean_sigma_mut: f64,
}

/// Squared mean of the square-rooted distances.
pub fn smr(distances: &[f64]) -> f64 {
    assert!(
        distances.iter().all(|&d| d >= 0.0),
        "smr: negative distance"
    );
    let mean_root = distances.iter().map(|&d| d.sqrt()).sum::<f64>() / distances.len() as f64;
    mean_root * mean_root
}

/// Fitness breakdown for one genome over a maze set.
pub fn evaluate_genome(
    genome: &Genome,
    mazes: &[Maze],
    params: &EvolutionParams,
) -> FitnessBreakdown {
    let mut distances = Vec::with_capacity(mazes.len());
    let mut activation_penalty = 0.0f64;
    for maze in mazes {
        let r = run_episode(maze, genome, params.steps, false)
            .expect("episode on generated maze cannot fail");
        let d = match params.distance_metric {
            DistanceMetric::Final => r.distance,
            DistanceMetric::Max => r.max_distance,
        };
        distances.push(d as f64);
        activation_penalty = activation_penalty.max(r.mean_activation);
    }
    let smr = smr(&distances);
    let sparsity_term = params.f_sparsity
        * match params.sparsity_unit {
            SparsityUnit::Count => {
                (genome.n * genome.n - genome.count_nonzero_effective()) as f64
            }
            SparsityUnit::Fraction => genome.sparsity(),
        };
    FitnessBreakdown {
        distances,
        smr,
        activation_penalty,
        sparsity_term,
        total: smr - activation_penalty + sparsity_term,
    }
}

/// Evaluate every agent on every maze. Results are ordered by agent index
/// and independent of worker count.
pub fn evaluate(
    pop: &Population,
    mazes: &[Maze],
    params: &EvolutionParams,
) -> Vec<FitnessBreakdown> {
    pop.agents
        .par_iter()
        .map(|g| evaluate_genome(g, mazes, params))
        .collect()
}

/// Agent indices ordered best-first (fitness descending, ties by index).
pub fn ranked_indices(fitnesses: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitnesses.len()).collect();
    idx.sort_by(|&a, &b| {
        fitnesses[b]
            .partial_cmp(&fitnesses[a])
            .expect("fitness must not be NaN")
            .then(a.cmp(&b))
    });
    idx
}

/// Per-agent reproduction probabilities: bottom half gets 0, top half is
/// proportional to fitness shifted non-negative, capped at 10% with the
/// excess redistributed among uncapped survivors until stable.
pub fn reproduction_probabilities(fitnesses: &[f64]) -> Vec<f64> {
    assert!(fitnesses.len() >= 2, "need at least two agents");
    let n = fitnesses.len();
    let ranked = ranked_indices(fitnesses);
    let survivors = &ranked[..n / 2];

    let min_fit = survivors
        .iter()
        .map(|&i| fitnesses[i])
        .fold(f64::INFINITY, f64::min);
    let shift = min_fit.min(0.0);
    let shifted: Vec<f64> = survivors.iter().map(|&i| fitnesses[i] - shift).collect();
    let total: f64 = shifted.iter().sum();

    let mut probs = vec![0.0; n];
    if total == 0.0 {
        // Degenerate all-equal case: uniform over the top half.
        for &i in survivors {
            probs[i] = 1.0 / survivors.len() as f64;
        }
    } else {
        for (&i, &s) in survivors.iter().zip(&shifted) {
            probs[i] = s / total;
        }
    }

    // Cap and redistribute. When fewer than 10 survivors exist the cap is
    // infeasible and the leftover mass is spread uniformly.
    let mut capped = vec![false; n];
    loop {
        let over: Vec<usize> = survivors
            .iter()
            .copied()
            .filter(|&i| !capped[i] && probs[i] > REPRODUCTION_CAP)
            .collect();
        if over.is_empty() {
            break;
        }
        for &i in &over {
            probs[i] = REPRODUCTION_CAP;
            capped[i] = true;
        }
        let capped_mass: f64 = survivors
            .iter()
            .filter(|&&i| capped[i])
            .map(|&i| probs[i])
            .sum();
        let free: Vec<usize> = survivors.iter().copied().filter(|&i| !capped[i]).collect();
        let free_mass: f64 = free.iter().map(|&i| probs[i]).sum();
        let remaining = 1.0 - capped_mass;
        if free.is_empty() || free_mass == 0.0 {
            if remaining > 0.0 {
                for &i in survivors {
                    probs[i] += remaining / survivors.len() as f64;
                }
            }
            break;
        }
        for &i in &free {
            probs[i] *= remaining / free_mass;
        }
    }
    probs
}

/// Sample an index from a discrete distribution via cumulative scan.
fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding tail: fall back to the last non-zero entry.
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("distribution has at least one positive entry")
}

/// Replace each bottom-half slot with a copy of a parent sampled from
/// `probs`. Survivors keep their slots unchanged (pre-mutation).
pub fn reproduce(pop: &mut Population, fitnesses: &[f64], probs: &[f64]) {
    let ranked = ranked_indices(fitnesses);
    let n = pop.agents.len();
    let replaced: Vec<usize> = ranked[n / 2..].to_vec();
    for slot in replaced {
        let mut rng = stream(
            pop.master_seed,
            pop.generation,
            slot as u64,
            Operator::SelectParent,
        );
        let parent = sample_index(probs, &mut rng);
        pop.agents[slot] = pop.agents[parent].clone();
    }
}

/// Add Gaussian(0, |sigma_mut|) noise to every live weight. Severed
/// connections are not subject to weight mutation.
pub fn mutate_weights<R: Rng>(genome: &mut Genome, rng: &mut R) {
    let sigma = genome.sigma_mut.abs();
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma).expect("non-negative sigma");
    for (w, &m) in genome.weights.iter_mut().zip(&genome.mask) {
        if m {
            *w += normal.sample(rng);
        }
    }
}

/// Multiply sigma_mut by Gaussian(1, |sigma_mut|). The product may go
/// negative in storage; every use takes the absolute value.
pub fn mutate_rate<R: Rng>(genome: &mut Genome, rng: &mut R) {
    let sigma = genome.sigma_mut.abs();
    if sigma == 0.0 {
        return;
    }
    let normal = Normal::new(1.0, sigma).expect("non-negative sigma");
    genome.sigma_mut *= normal.sample(rng);
}

/// Sever live connections with p_disconnect, restore severed ones with
/// p_connect. Flips are decided on the pre-mutation mask; restored
/// connections get a fresh uniform weight in [-sigma_init, sigma_init].
pub fn mutate_connections<R: Rng>(genome: &mut Genome, params: &EvolutionParams, rng: &mut R) {
    let s = sigma_init(genome.n);
    let before = genome.mask.clone();
    for k in 0..genome.mask.len() {
        if before[k] {
            if params.p_disconnect > 0.0 && rng.gen_bool(params.p_disconnect) {
                genome.mask[k] = false;
                genome.weights[k] = 0.0;
            }
        } else if params.p_connect > 0.0 && rng.gen_bool(params.p_connect) {
            genome.mask[k] = true;
            genome.weights[k] = rng.gen_range(-s..=s);
        }
    }
}

/// tau <- |tau * Gaussian(1, |sigma_mut|)|.
pub fn mutate_threshold<R: Rng>(genome: &mut Genome, rng: &mut R) {
    let sigma = genome.sigma_mut.abs();
    let normal = Normal::new(1.0, sigma).expect("non-negative sigma");
    genome.tau = (genome.tau * normal.sample(rng)).abs();
}

/// Apply all enabled operators to one agent in fixed order:
/// weights, rate, connections, threshold.
pub fn mutate_agent(
    genome: &mut Genome,
    params: &EvolutionParams,
    master_seed: u64,
    generation: u64,
    agent_index: u64,
) {
    if params.weight_mutation_on {
        let mut rng = stream(master_seed, generation, agent_index, Operator::MutateWeights);
        mutate_weights(genome, &mut rng);
        let mut rng = stream(master_seed, generation, agent_index, Operator::MutateRate);
        mutate_rate(genome, &mut rng);
    }
    if params.connection_mutation_on {
        let mut rng = stream(
            master_seed,
            generation,
            agent_index,
            Operator::MutateConnections,
        );
        mutate_connections(genome, params, &mut rng);
    }
    if params.threshold_mutation_on {
        let mut rng = stream(
            master_seed,
            generation,
            agent_index,
            Operator::MutateThreshold,
        );
        mutate_threshold(genome, &mut rng);
    }
}

fn metrics_from(
    pop: &Population,
    breakdowns: &[FitnessBreakdown],
) -> GenerationMetrics {
    let n = breakdowns.len() as f64;
    let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
    let perfs: Vec<f64> = breakdowns
        .iter()
        .map(|b| b.distances.iter().sum::<f64>() / b.distances.len() as f64)
        .collect();
    GenerationMetrics {
        generation: pop.generation,
        best_fitness: totals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        mean_fitness: totals.iter().sum::<f64>() / n,
        best_train_perf: perfs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
        mean_train_perf: perfs.iter().sum::<f64>() / n,
        mean_sparsity: pop.agents.iter().map(|g| g.sparsity()).sum::<f64>() / n,
        mean_sigma_mut: pop.agents.iter().map(|g| g.sigma_mut.abs()).sum::<f64>() / n,
    }
}

/// Evaluate the population as is, then reproduce and mutate into the next
/// generation. The returned metrics describe the evaluated (pre-step)
/// population.
pub fn step_generation(
    pop: &mut Population,
    mazes: &[Maze],
    params: &EvolutionParams,
) -> GenerationMetrics {
    let breakdowns = evaluate(pop, mazes, params);
    let metrics = metrics_from(pop, &breakdowns);
    let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
    let probs = reproduction_probabilities(&totals);
    reproduce(pop, &totals, &probs);
    let (seed, gen) = (pop.master_seed, pop.generation);
    for (i, agent) in pop.agents.iter_mut().enumerate() {
        mutate_agent(agent, params, seed, gen, i as u64);
    }
    pop.generation += 1;
    metrics
}

/// Metrics of the current population without advancing it.
pub fn evaluate_metrics(
    pop: &Population,
    mazes: &[Maze],
    params: &EvolutionParams,
) -> GenerationMetrics {
    let breakdowns = evaluate(pop, mazes, params);
    metrics_from(pop, &breakdowns)
}
