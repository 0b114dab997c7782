//! Full-episode execution: the clamp -> forward -> act loop.

use crate::error::Error;
use crate::maze::{apply_action, sense, start_state, Action, AgentState, Maze, SensorReading};
use crate::network::{clamp_inputs, forward_with, select_action, Genome, OUTPUT_OFFSET};

pub const DEFAULT_STEPS: usize = 400;

/// One recorded step of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub step: usize,
    pub agent: AgentState,
    pub sensors: SensorReading,
    /// Post-forward activations of all neurons.
    pub activations: Vec<f64>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Covered x-distance: final x minus start x.
    pub distance: usize,
    /// Distance under the alternative metric: max x reached minus start x.
    pub max_distance: usize,
    /// Mean post-forward activation over all neurons and steps.
    pub mean_activation: f64,
    pub trajectory: Option<Vec<TrajectoryStep>>,
}

/// Run `steps` actions from the maze's start pose. Pure function of its
/// arguments; no randomness inside episodes.
pub fn run_episode(
    maze: &Maze,
    genome: &Genome,
    steps: usize,
    record_trajectory: bool,
) -> Result<EpisodeResult, Error> {
    if steps < 1 {
        return Err(Error::Config("episode needs at least 1 step".into()));
    }
    let n = genome.n;
    let eff = genome.effective_weights();
    let mut agent = start_state(maze)?;
    let start_x = agent.x;
    let mut max_x = agent.x;
    let mut state = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut activation_sum = 0.0;
    let mut trajectory = record_trajectory.then(Vec::new);

    for step in 0..steps {
        let sensors = sense(maze, &agent);
        clamp_inputs(genome, &mut state, &sensors);
        forward_with(&eff, n, &state, &mut next);
        std::mem::swap(&mut state, &mut next);
        let action = select_action(&[
            state[OUTPUT_OFFSET],
            state[OUTPUT_OFFSET + 1],
            state[OUTPUT_OFFSET + 2],
        ]);
        activation_sum += state.iter().sum::<f64>();
        if let Some(t) = trajectory.as_mut() {
            t.push(TrajectoryStep {
                step,
                agent,
                sensors,
                activations: state.clone(),
                action,
            });
        }
        agent = apply_action(maze, &agent, action);
        max_x = max_x.max(agent.x);
    }

    Ok(EpisodeResult {
        distance: agent.x - start_x,
        max_distance: max_x - start_x,
        mean_activation: activation_sum / (n * steps) as f64,
        trajectory,
    })
}
