//! Brute-force oracles and shared helpers for the integration suites.
//! Each oracle recomputes a library result by a deliberately different
//! route so that agreement is meaningful evidence, not tautology.

#![allow(dead_code)]

use evomaze::evolution::{ranked_indices, REPRODUCTION_CAP};
use evomaze::maze::{AgentState, Heading, Maze, SensorReading, VISION_RANGE};
use evomaze::network::Genome;
use rand::Rng;

/// smr by pairwise expansion: ((Σ√d)/N)² = (1/N²)·Σ_i Σ_j √(d_i d_j).
pub fn smr_oracle(distances: &[f64]) -> f64 {
    let n = distances.len() as f64;
    let mut total = 0.0;
    for &a in distances {
        for &b in distances {
            total += (a * b).sqrt();
        }
    }
    total / (n * n)
}

/// Cell-by-cell ray march: count free cells ahead of `(x, y)` along
/// `heading`, capped at the vision range.
pub fn ray_oracle(maze: &Maze, x: usize, y: usize, heading: Heading) -> u32 {
    let (dx, dy) = heading.delta();
    let mut free = 0u32;
    let (mut cx, mut cy) = (x as isize, y as isize);
    while free < VISION_RANGE {
        cx += dx;
        cy += dy;
        if cx < 0 || cy < 0 || !maze.is_free(cx as usize, cy as usize) {
            break;
        }
        free += 1;
    }
    free
}

/// Full sensor reading assembled from the ray oracle and the compass.
pub fn sense_oracle(maze: &Maze, agent: &AgentState) -> SensorReading {
    let mut compass = [0.0; 4];
    compass[agent.heading.compass_index()] = 1.0;
    SensorReading {
        d_left: ray_oracle(maze, agent.x, agent.y, agent.heading.left()),
        d_front: ray_oracle(maze, agent.x, agent.y, agent.heading),
        d_right: ray_oracle(maze, agent.x, agent.y, agent.heading.right()),
        compass,
    }
}

/// Winner-take-all by linear scan with explicit lowest-index tie break.
pub fn argmax_oracle(outputs: &[f64; 3]) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if outputs[k] > outputs[best] {
            best = k;
        }
    }
    best
}

/// Reproduction probabilities by recursive redistribution: cap the
/// over-cap set, then solve the residual problem on the uncapped set.
pub fn reproduction_oracle(fitnesses: &[f64]) -> Vec<f64> {
    fn redistribute(probs: &mut [f64], survivors: &[usize], free: Vec<usize>) {
        let over: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| probs[i] > REPRODUCTION_CAP)
            .collect();
        if over.is_empty() {
            return;
        }
        for &i in &over {
            probs[i] = REPRODUCTION_CAP;
        }
        let next: Vec<usize> = free
            .into_iter()
            .filter(|i| !over.contains(i))
            .collect();
        let capped_mass: f64 = survivors
            .iter()
            .filter(|i| !next.contains(i))
            .map(|&i| probs[i])
            .sum();
        let remaining = 1.0 - capped_mass;
        let free_mass: f64 = next.iter().map(|&i| probs[i]).sum();
        if next.is_empty() || free_mass == 0.0 {
            // Degenerate: no proportional carrier left; spread uniformly.
            if remaining > 0.0 {
                for &i in survivors {
                    probs[i] += remaining / survivors.len() as f64;
                }
            }
            return;
        }
        for &i in &next {
            probs[i] *= remaining / free_mass;
        }
        redistribute(probs, survivors, next);
    }

    let n = fitnesses.len();
    let ranked = ranked_indices(fitnesses);
    let survivors = &ranked[..n / 2];
    let mut probs = vec![0.0; n];

    let min_fit = survivors
        .iter()
        .map(|&i| fitnesses[i])
        .fold(f64::INFINITY, f64::min);
    let shift = min_fit.min(0.0);
    let total: f64 = survivors.iter().map(|&i| fitnesses[i] - shift).sum();
    if total == 0.0 {
        for &i in survivors {
            probs[i] = 1.0 / survivors.len() as f64;
        }
        return probs;
    }
    for &i in survivors {
        probs[i] = (fitnesses[i] - shift) / total;
    }
    redistribute(&mut probs, survivors, survivors.to_vec());
    probs
}

/// Kendall tau-a by O(n²) concordance counting.
pub fn kendall_oracle(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len();
    let mut score = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = (pairs[i].0 - pairs[j].0).partial_cmp(&0.0).unwrap();
            let dy = (pairs[i].1 - pairs[j].1).partial_cmp(&0.0).unwrap();
            if dx == std::cmp::Ordering::Equal || dy == std::cmp::Ordering::Equal {
                continue;
            }
            score += if dx == dy { 1 } else { -1 };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

/// Connected components of the non-zero effective weight graph (edges
/// undirected) by flood fill, smallest member first in each component.
pub fn components_oracle(genome: &Genome) -> Vec<Vec<usize>> {
    let n = genome.n;
    let w = genome.effective_weights();
    let mut adj = vec![Vec::new(); n];
    for t in 0..n {
        for s in 0..n {
            if w[t * n + s] != 0.0 {
                adj[t].push(s);
                adj[s].push(t);
            }
        }
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for v in 0..n {
        if seen[v] {
            continue;
        }
        let mut stack = vec![v];
        let mut comp = Vec::new();
        seen[v] = true;
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &x in &adj[u] {
                if !seen[x] {
                    seen[x] = true;
                    stack.push(x);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// A random genome with independent mask coin-flips, for property checks.
pub fn random_genome<R: Rng>(rng: &mut R, n: usize, density: f64) -> Genome {
    let mut weights = vec![0.0; n * n];
    let mut mask = vec![false; n * n];
    for k in 0..n * n {
        if rng.gen_bool(density) {
            mask[k] = true;
            weights[k] = rng.gen_range(-1.0..1.0);
        }
    }
    Genome {
        n,
        weights,
        mask,
        sigma_mut: 0.01,
        tau: 0.0,
        bias_neuron: true,
    }
}
