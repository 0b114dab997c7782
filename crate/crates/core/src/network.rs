//! Genome representation and the recurrent ReLU forward pass.
//!
//! A genome is a dense n-by-n weight matrix (row = target neuron,
//! column = source) plus a boolean connection mask and a self-adaptive
//! mutation scale. Neurons 0-6 are inputs (three wall distances, four
//! compass bits), 7-9 are the action outputs, the rest are hidden.
//! Severed connections carry weight exactly 0 and stay 0 until a
//! reconnection mutation restores them.

use crate::error::Error;
use crate::maze::{Action, SensorReading};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const INPUT_NEURONS: usize = 7;
pub const OUTPUT_NEURONS: usize = 3;
/// First output neuron; outputs are 7 (straight), 8 (turn right), 9 (turn left).
pub const OUTPUT_OFFSET: usize = 7;
/// Neuron clamped to 1.0 each step when the bias flag is on.
pub const BIAS_NEURON: usize = 10;
pub const MIN_NEURONS: usize = 11;
pub const DEFAULT_NEURONS: usize = 16;

/// Initial weight scale: 4 * sqrt(6 / (n + n)) / 10.
pub fn sigma_init(n: usize) -> f64 {
    4.0 * (6.0 / (n as f64 + n as f64)).sqrt() / 10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub n: usize,
    /// Row-major n*n matrix; weights[target * n + source].
    pub weights: Vec<f64>,
    /// false = severed connection; the stored weight is then exactly 0.
    pub mask: Vec<bool>,
    /// Self-adaptive mutation scale; used as |sigma_mut|.
    pub sigma_mut: f64,
    /// Prune threshold: weights with |w| < tau are treated as 0. Off at 0.
    pub tau: f64,
    /// Clamp neuron 10 to 1.0 every step.
    pub bias_neuron: bool,
}

impl Genome {
    pub fn weight(&self, target: usize, source: usize) -> f64 {
        self.weights[target * self.n + source]
    }

    /// The matrix actually used by the forward pass: masked entries and
    /// entries with |w| < tau read as 0.
    pub fn effective_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.mask)
            .map(|(&w, &m)| {
                if m && w.abs() >= self.tau && w != 0.0 {
                    w
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn count_nonzero_effective(&self) -> usize {
        self.effective_weights().iter().filter(|&&w| w != 0.0).count()
    }

    /// Model sparsity: 1 - n_nonzero / n_possible over all n*n entries.
    pub fn sparsity(&self) -> f64 {
        1.0 - self.count_nonzero_effective() as f64 / (self.n * self.n) as f64
    }

    /// Invariant check used by tests: severed entries store exactly 0.
    pub fn mask_zero_coupled(&self) -> bool {
        self.weights
            .iter()
            .zip(&self.mask)
            .all(|(&w, &m)| m || w == 0.0)
    }
}

/// Fresh fully connected genome with uniform weights in [-sigma_init, sigma_init].
pub fn init_genome<R: Rng>(
    rng: &mut R,
    n: usize,
    sigma_mut: f64,
    bias_neuron: bool,
) -> Result<Genome, Error> {
    if n < MIN_NEURONS {
        return Err(Error::Config(format!(
            "need at least {MIN_NEURONS} neurons (7 inputs + 3 outputs + 1 hidden), got {n}"
        )));
    }
    let s = sigma_init(n);
    let weights = (0..n * n).map(|_| rng.gen_range(-s..=s)).collect();
    Ok(Genome {
        n,
        weights,
        mask: vec![true; n * n],
        sigma_mut,
        tau: 0.0,
        bias_neuron,
    })
}

/// Winner-take-all over (straight, turn right, turn left); ties and the
/// all-zero case fall to the lowest index, so no activation means straight.
pub fn select_action(outputs: &[f64; 3]) -> Action {
    let mut best = 0;
    for i in 1..3 {
        if outputs[i] > outputs[best] {
            best = i;
        }
    }
    match best {
        0 => Action::Straight,
        1 => Action::TurnRight,
        _ => Action::TurnLeft,
    }
}

/// Clamp sensors (and the bias neuron) into `state` in place.
pub fn clamp_inputs(genome: &Genome, state: &mut [f64], sensors: &SensorReading) {
    state[..INPUT_NEURONS].copy_from_slice(&sensors.inputs());
    if genome.bias_neuron {
        state[BIAS_NEURON] = 1.0;
    }
}

/// One forward pass against a precomputed effective-weight matrix:
/// next[i] = ReLU(sum_j w[i][j] * state[j]).
pub fn forward_with(weights: &[f64], n: usize, state: &[f64], next: &mut [f64]) {
    for i in 0..n {
        let row = &weights[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            acc += row[j] * state[j];
        }
        next[i] = if acc > 0.0 { acc } else { 0.0 };
    }
}

/// Clamp sensors, run one recurrent step, pick the action.
pub fn forward_step(
    genome: &Genome,
    state: &mut Vec<f64>,
    sensors: &SensorReading,
) -> (Vec<f64>, Action) {
    assert_eq!(state.len(), genome.n, "state dimension mismatch");
    clamp_inputs(genome, state, sensors);
    let eff = genome.effective_weights();
    let mut next = vec![0.0; genome.n];
    forward_with(&eff, genome.n, state, &mut next);
    let action = select_action(&[
        next[OUTPUT_OFFSET],
        next[OUTPUT_OFFSET + 1],
        next[OUTPUT_OFFSET + 2],
    ]);
    (next, action)
}
