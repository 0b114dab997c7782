//! Post-hoc analyses of trained populations: weight histograms,
//! sparsity/performance correlation, single-ablation connection probing,
//! threshold-deletion curves and subnetwork detection.

use crate::error::Error;
use crate::evolution::{evaluate_genome, EvolutionParams, GenerationMetrics};
use crate::maze::Maze;
use crate::network::{Genome, INPUT_NEURONS, OUTPUT_NEURONS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightHistogram {
    /// bins + 1 edges; empty when there are no non-zero weights.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Fraction of non-zero effective weights that are negative.
    pub negative_fraction: f64,
    pub total_nonzero: usize,
}

/// Histogram over the non-zero effective weights of a set of genomes.
/// Zero connections are not included.
pub fn weight_histogram<'a, I>(genomes: I, bins: usize) -> Result<WeightHistogram, Error>
where
    I: IntoIterator<Item = &'a Genome>,
{
    if bins < 1 {
        return Err(Error::Parameter("need at least one bin".into()));
    }
    let mut values: Vec<f64> = Vec::new();
    for g in genomes {
        values.extend(g.effective_weights().into_iter().filter(|&w| w != 0.0));
    }
    if values.is_empty() {
        return Ok(WeightHistogram {
            edges: Vec::new(),
            counts: Vec::new(),
            negative_fraction: 0.0,
            total_nonzero: 0,
        });
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &v in &values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let negative = values.iter().filter(|&&v| v < 0.0).count();
    Ok(WeightHistogram {
        edges,
        counts,
        negative_fraction: negative as f64 / values.len() as f64,
        total_nonzero: values.len(),
    })
}

/// Per-generation mean sparsity, straight from the metric rows.
pub fn sparsity_trajectory(metrics: &[GenerationMetrics]) -> Vec<f64> {
    metrics.iter().map(|m| m.mean_sparsity).collect()
}

/// Kendall rank correlation (tau-a): pairwise concordance minus
/// discordance over all pairs, ties contributing zero. Computed with
/// Knight's O(n log n) algorithm: sort by x, then count discordant pairs
/// as merge-sort inversions in y among strictly-x-ordered pairs.
pub fn rank_correlation(pairs: &[(f64, f64)]) -> Result<f64, Error> {
    let n = pairs.len();
    if n < 3 {
        return Err(Error::Parameter(
            "rank correlation needs at least 3 points".into(),
        ));
    }
    let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in correlation input"));

    let tie_pairs = |mut keys: Vec<u64>| -> u64 {
        keys.sort_unstable();
        let mut total = 0u64;
        let mut run = 1u64;
        for k in 1..keys.len() {
            if keys[k] == keys[k - 1] {
                run += 1;
            } else {
                total += run * (run - 1) / 2;
                run = 1;
            }
        }
        total + run * (run - 1) / 2
    };
    let xs: Vec<u64> = sorted.iter().map(|p| p.0.to_bits()).collect();
    let ys: Vec<u64> = sorted.iter().map(|p| p.1.to_bits()).collect();
    let joint: Vec<u64> = sorted
        .iter()
        .map(|p| p.0.to_bits().rotate_left(17) ^ p.1.to_bits())
        .collect();
    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let n1 = tie_pairs(xs);
    let n2 = tie_pairs(ys);
    let n3 = tie_pairs(joint);

    // Inversions in y of the (x, y)-sorted sequence = discordant pairs.
    let mut y_seq: Vec<f64> = sorted.iter().map(|p| p.1).collect();
    let discordant = count_inversions(&mut y_seq);

    // C - D = n0 - n1 - n2 + n3 - 2D (pairs tied in x and y are counted
    // in both n1 and n2, restored once via n3).
    let cd = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * discordant as i64;
    Ok(cd as f64 / n0 as f64)
}

fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inv = count_inversions(left) + count_inversions(right);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if right[j] < left[i] {
            inv += (left.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        } else {
            merged.push(left[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    values.copy_from_slice(&merged);
    inv
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveConnections {
    pub active_count: usize,
    /// (target, source) pairs whose single ablation does not decrease
    /// fitness below baseline - epsilon.
    pub prunable: Vec<(usize, usize)>,
    pub baseline_fitness: f64,
}

/// Single-ablation probe: disable each non-zero effective connection
/// alone, re-evaluate fitness on `mazes`, and collect the connections
/// whose removal does not decrease fitness. The input genome is never
/// modified; every probe owns a private copy.
pub fn active_connections(
    genome: &Genome,
    mazes: &[Maze],
    params: &EvolutionParams,
    epsilon: f64,
) -> ActiveConnections {
    let baseline = evaluate_genome(genome, mazes, params).total;
    let eff = genome.effective_weights();
    let nonzero: Vec<usize> = (0..eff.len()).filter(|&k| eff[k] != 0.0).collect();
    let prunable: Vec<(usize, usize)> = nonzero
        .par_iter()
        .filter_map(|&k| {
            let mut probe = genome.clone();
            probe.mask[k] = false;
            probe.weights[k] = 0.0;
            let fitness = evaluate_genome(&probe, mazes, params).total;
            (fitness >= baseline - epsilon).then_some((k / genome.n, k % genome.n))
        })
        .collect();
    ActiveConnections {
        active_count: nonzero.len() - prunable.len(),
        prunable,
        baseline_fitness: baseline,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneCurve {
    pub thresholds: Vec<f64>,
    pub remaining_connections: Vec<usize>,
    /// Mean covered distance over the validation mazes at each threshold.
    pub validation_performance: Vec<f64>,
}

/// Zero all weights with |w| below each threshold and measure validation
/// performance. The original genome is untouched.
pub fn threshold_prune_curve(
    genome: &Genome,
    validation_mazes: &[Maze],
    thresholds: &[f64],
    steps: usize,
) -> Result<PruneCurve, Error> {
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Parameter("thresholds must be ascending".into()));
    }
    let results: Vec<(usize, f64)> = thresholds
        .par_iter()
        .map(|&t| {
            let mut probe = genome.clone();
            probe.tau = probe.tau.max(t);
            let remaining = probe.count_nonzero_effective();
            let total: f64 = validation_mazes
                .iter()
                .map(|m| {
                    crate::episode::run_episode(m, &probe, steps, false)
                        .expect("episode on generated maze cannot fail")
                        .distance as f64
                })
                .sum();
            (remaining, total / validation_mazes.len() as f64)
        })
        .collect();
    Ok(PruneCurve {
        thresholds: thresholds.to_vec(),
        remaining_connections: results.iter().map(|r| r.0).collect(),
        validation_performance: results.iter().map(|r| r.1).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetworkComponents {
    /// Weakly connected components over non-zero effective connections,
    /// each sorted ascending; singletons included.
    pub components: Vec<Vec<usize>>,
    /// Marks components containing neither input nor output neurons:
    /// pseudo-complexity that could be deleted outright.
    pub pseudo_complexity: Vec<bool>,
}

/// Weakly connected components of the directed connection graph.
pub fn subnetwork_components(genome: &Genome) -> SubnetworkComponents {
    let n = genome.n;
    let eff = genome.effective_weights();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for target in 0..n {
        for source in 0..n {
            if eff[target * n + source] != 0.0 {
                let a = find(&mut parent, target);
                let b = find(&mut parent, source);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..n {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(v);
    }
    let components: Vec<Vec<usize>> = groups.into_values().collect();
    let pseudo_complexity = components
        .iter()
        .map(|c| !c.iter().any(|&v| v < INPUT_NEURONS + OUTPUT_NEURONS))
        .collect();
    SubnetworkComponents {
        components,
        pseudo_complexity,
    }
}

/// (final mean sparsity, final validation performance) pairs for a set of
/// finished runs, ready for rank correlation.
pub fn sparsity_validation_pairs(
    runs: &[&crate::experiments::RunRecord],
) -> Vec<(f64, f64)> {
    runs.iter()
        .map(|r| (r.final_mean_sparsity(), r.final_validation().overall_mean))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{DistanceMetric, SparsityUnit};
    use crate::maze::generate_default_maze;
    use crate::network::init_genome;
    use crate::rng::{stream, Operator};

    fn params() -> EvolutionParams {
        EvolutionParams {
            p_disconnect: 0.0,
            p_connect: 0.0,
            f_sparsity: 0.0,
            weight_mutation_on: true,
            connection_mutation_on: false,
            threshold_mutation_on: false,
            sparsity_unit: SparsityUnit::Count,
            distance_metric: DistanceMetric::Final,
            steps: 100,
        }
    }

    fn zero_genome() -> Genome {
        Genome {
            n: 16,
            weights: vec![0.0; 256],
            mask: vec![true; 256],
            sigma_mut: 0.0,
            tau: 0.0,
            bias_neuron: false,
        }
    }

    #[test]
    fn histogram_of_zero_matrix_is_empty() {
        let h = weight_histogram([&zero_genome()], 10).unwrap();
        assert!(h.edges.is_empty());
        assert_eq!(h.total_nonzero, 0);
    }

    #[test]
    fn histogram_symmetric_weights_half_negative() {
        let mut g = zero_genome();
        for k in 0..10 {
            g.weights[k] = (k + 1) as f64 * 0.1;
            g.weights[100 + k] = -((k + 1) as f64) * 0.1;
        }
        let h = weight_histogram([&g], 4).unwrap();
        assert_eq!(h.negative_fraction, 0.5);
        assert_eq!(h.total_nonzero, 20);
        assert_eq!(h.counts.iter().sum::<usize>(), 20);
        assert_eq!(h.edges.len(), 5);
    }

    #[test]
    fn histogram_counts_sum_to_nonzero_weights() {
        let g = init_genome(&mut stream(1, 0, 0, Operator::Init), 16, 0.01, true).unwrap();
        let h = weight_histogram([&g], 7).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), g.count_nonzero_effective());
    }

    #[test]
    fn rank_correlation_monotone_is_one() {
        let pairs: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, (k * k) as f64)).collect();
        assert_eq!(rank_correlation(&pairs).unwrap(), 1.0);
        let reversed: Vec<(f64, f64)> = (0..50).map(|k| (k as f64, -(k as f64))).collect();
        assert_eq!(rank_correlation(&reversed).unwrap(), -1.0);
    }

    #[test]
    fn rank_correlation_needs_three_points() {
        assert!(rank_correlation(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
    }

    /// O(n^2) concordance oracle for tau-a.
    fn tau_oracle(pairs: &[(f64, f64)]) -> f64 {
        let n = pairs.len();
        let mut s = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pairs[i].0 - pairs[j].0;
                let dy = pairs[i].1 - pairs[j].1;
                let p = dx * dy;
                if p > 0.0 {
                    s += 1;
                } else if p < 0.0 {
                    s -= 1;
                }
            }
        }
        s as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn rank_correlation_matches_concordance_oracle() {
        use rand::Rng;
        let mut rng = stream(42, 0, 0, Operator::Init);
        for trial in 0..200 {
            let n = rng.gen_range(3..40);
            let pairs: Vec<(f64, f64)> = (0..n)
                .map(|_| {
                    // Coarse grid so ties actually occur.
                    (
                        rng.gen_range(0..6) as f64,
                        rng.gen_range(0..6) as f64,
                    )
                })
                .collect();
            let fast = rank_correlation(&pairs).unwrap();
            let slow = tau_oracle(&pairs);
            assert!(
                (fast - slow).abs() < 1e-12,
                "trial {trial}: {fast} vs {slow} on {pairs:?}"
            );
        }
    }

    #[test]
    fn dead_connection_is_prunable_and_genome_untouched() {
        let mazes: Vec<Maze> = (0..2).map(generate_default_maze).collect();
        let mut g = zero_genome();
        // A connection between two hidden neurons that never activate.
        g.weights[15 * 16 + 14] = 0.7;
        let before = g.clone();
        let r = active_connections(&g, &mazes, &params(), 0.0);
        assert_eq!(g, before);
        assert!(r.prunable.contains(&(15, 14)));
        assert_eq!(r.active_count, 0);
    }

    #[test]
    fn active_count_bounded_by_nonzero() {
        let mazes: Vec<Maze> = (0..2).map(generate_default_maze).collect();
        let g = init_genome(&mut stream(3, 0, 0, Operator::Init), 16, 0.01, true).unwrap();
        let r = active_connections(&g, &mazes, &params(), 0.0);
        assert!(r.active_count + r.prunable.len() == g.count_nonzero_effective());
    }

    #[test]
    fn prune_curve_zero_threshold_is_baseline() {
        let mazes: Vec<Maze> = (0..3).map(generate_default_maze).collect();
        let g = init_genome(&mut stream(4, 0, 0, Operator::Init), 16, 0.01, true).unwrap();
        let baseline: f64 = mazes
            .iter()
            .map(|m| {
                crate::episode::run_episode(m, &g, 100, false).unwrap().distance as f64
            })
            .sum::<f64>()
            / mazes.len() as f64;
        let huge = 100.0;
        let curve = threshold_prune_curve(&g, &mazes, &[0.0, 0.05, huge], 100).unwrap();
        assert_eq!(curve.validation_performance[0], baseline);
        assert_eq!(curve.remaining_connections[0], 256);
        // Saturation: everything pruned, the agent is a straight-runner.
        assert_eq!(curve.remaining_connections[2], 0);
        let zero_perf: f64 = mazes
            .iter()
            .map(|m| {
                crate::episode::run_episode(m, &zero_genome(), 100, false)
                    .unwrap()
                    .distance as f64
            })
            .sum::<f64>()
            / mazes.len() as f64;
        assert_eq!(curve.validation_performance[2], zero_perf);
        // Monotone connection counts.
        assert!(curve.remaining_connections.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn prune_curve_rejects_unsorted_thresholds() {
        let mazes: Vec<Maze> = (0..1).map(generate_default_maze).collect();
        let g = zero_genome();
        assert!(threshold_prune_curve(&g, &mazes, &[0.1, 0.0], 10).is_err());
    }

    #[test]
    fn components_of_full_and_empty_graphs() {
        let g = init_genome(&mut stream(5, 0, 0, Operator::Init), 16, 0.01, true).unwrap();
        let c = subnetwork_components(&g);
        assert_eq!(c.components.len(), 1);
        assert!(!c.pseudo_complexity[0]);

        let c = subnetwork_components(&zero_genome());
        assert_eq!(c.components.len(), 16);
        // Isolated hidden neurons count as pseudo-complexity.
        for (comp, &pseudo) in c.components.iter().zip(&c.pseudo_complexity) {
            let v = comp[0];
            assert_eq!(pseudo, v >= 10);
        }
    }

    /// Brute-force flood fill oracle over the undirected graph.
    fn flood_fill_components(genome: &Genome) -> Vec<Vec<usize>> {
        let n = genome.n;
        let eff = genome.effective_weights();
        let mut adj = vec![Vec::new(); n];
        for t in 0..n {
            for s in 0..n {
                if eff[t * n + s] != 0.0 {
                    adj[t].push(s);
                    adj[s].push(t);
                }
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut comp = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out.sort();
        out
    }

    #[test]
    fn components_match_flood_fill_oracle() {
        use rand::Rng;
        let mut rng = stream(6, 0, 0, Operator::Init);
        for _ in 0..100 {
            let mut g = zero_genome();
            for _ in 0..rng.gen_range(0..40) {
                let k = rng.gen_range(0..256);
                g.weights[k] = rng.gen_range(-1.0..1.0f64);
            }
            let mut mine = subnetwork_components(&g).components;
            mine.sort();
            assert_eq!(mine, flood_fill_components(&g));
        }
    }
}
