//! Property suite for the module invariants: mask-zero coupling, input
//! reset, wall avoidance, distribution validity, probe-and-restore, and
//! checkpoint resume equality.

mod common;

use evomaze::analysis::{active_connections, threshold_prune_curve};
use evomaze::episode::run_episode;
use evomaze::evolution::{mutate_agent, reproduction_probabilities, Population, REPRODUCTION_CAP};
use evomaze::experiments::{run_experiment, table1_config, Checkpoint, Profile};
use evomaze::maze::{generate_default_maze, sense, start_state, SensorReading};
use evomaze::network::{clamp_inputs, BIAS_NEURON, INPUT_NEURONS};
use evomaze::rng::{stream, Operator};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Severed connections carry weight exactly 0 through any mutation mix.
    #[test]
    fn mask_zero_coupling_survives_mutation(
        seed in any::<u64>(),
        p_disconnect in 0.0..0.5f64,
        p_connect in 0.0..0.5f64,
        generations in 1u64..20,
    ) {
        let mut config = table1_config("connection severance", Profile::Desk).unwrap();
        config.p_disconnect = p_disconnect;
        config.p_connect = p_connect;
        let params = config.evolution_params();
        let mut pop = Population::init(seed, 4, 16, 0.01, true, false).unwrap();
        for gen in 0..generations {
            for (i, agent) in pop.agents.iter_mut().enumerate() {
                mutate_agent(agent, &params, seed, gen, i as u64);
                prop_assert!(agent.mask_zero_coupled(), "decoupled at gen {gen}");
            }
        }
    }

    /// clamp_inputs overwrites the sensory neurons (and the bias neuron)
    /// regardless of what the recurrent state held before.
    #[test]
    fn inputs_reset_every_step(seed in any::<u64>(), maze_seed in 0u64..500) {
        let mut rng = stream(seed, 0, 0, Operator::Init);
        let genome = common::random_genome(&mut rng, 16, 0.3);
        let maze = generate_default_maze(maze_seed);
        let agent = start_state(&maze).unwrap();
        let sensors: SensorReading = sense(&maze, &agent);
        let mut state: Vec<f64> = (0..16).map(|_| rng.gen_range(-5.0..5.0)).collect();
        clamp_inputs(&genome, &mut state, &sensors);
        let want = sensors.inputs();
        for k in 0..INPUT_NEURONS {
            prop_assert_eq!(state[k], want[k]);
        }
        prop_assert_eq!(state[BIAS_NEURON], 1.0);
    }

    /// The agent pose stays on free cells for the whole episode.
    #[test]
    fn agent_never_enters_walls(seed in any::<u64>(), maze_seed in 0u64..500) {
        let mut rng = stream(seed, 0, 0, Operator::Init);
        let genome = common::random_genome(&mut rng, 16, 0.3);
        let maze = generate_default_maze(maze_seed);
        let result = run_episode(&maze, &genome, 200, true).unwrap();
        for step in result.trajectory.unwrap() {
            prop_assert!(
                maze.is_free(step.agent.x, step.agent.y),
                "wall cell ({}, {}) at step {}",
                step.agent.x, step.agent.y, step.step
            );
        }
    }

    /// Reproduction probabilities form a distribution: non-negative, sum
    /// 1, bottom half zero, and capped whenever the cap is feasible.
    #[test]
    fn reproduction_is_valid_distribution(
        fitnesses in prop::collection::vec(-100.0..400.0f64, 2..80),
    ) {
        let probs = reproduction_probabilities(&fitnesses);
        let n = fitnesses.len();
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");
        for &p in &probs {
            prop_assert!(p >= 0.0);
        }
        let survivors = n / 2;
        if REPRODUCTION_CAP * survivors as f64 > 1.0 {
            for &p in &probs {
                prop_assert!(p <= REPRODUCTION_CAP + 1e-12, "over cap: {p}");
            }
        }
        // Bottom half by fitness gets zero probability.
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by(|&a, &b| {
            fitnesses[b].partial_cmp(&fitnesses[a]).unwrap().then(a.cmp(&b))
        });
        for &i in &ranked[survivors..] {
            prop_assert_eq!(probs[i], 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Connection probing and threshold probing restore the genome bit
    /// for bit; analysis never perturbs its subject.
    #[test]
    fn probing_restores_the_genome(seed in any::<u64>()) {
        let mut rng = stream(seed, 0, 0, Operator::Init);
        let genome = common::random_genome(&mut rng, 12, 0.2);
        let before = genome.clone();
        let mazes = vec![generate_default_maze(1001)];
        let mut params = table1_config("control", Profile::Desk)
            .unwrap()
            .evolution_params();
        params.steps = 50;
        let probe = active_connections(&genome, &mazes, &params, 0.0);
        prop_assert!(probe.active_count + probe.prunable.len()
            == genome.count_nonzero_effective());
        let curve = threshold_prune_curve(&genome, &mazes, &[0.0, 0.1, 0.5], 50).unwrap();
        prop_assert_eq!(curve.remaining_connections[0], genome.count_nonzero_effective());
        prop_assert_eq!(&genome, &before);
    }

    /// Resuming from a checkpoint reproduces the uninterrupted run.
    #[test]
    fn checkpoint_resume_is_exact(seed in any::<u64>()) {
        let mut config = table1_config("connection severance", Profile::Desk).unwrap();
        config.pool_size = 8;
        config.generations = 5;
        config.steps = 60;
        config.training_maze_seeds = vec![1001, 1002];
        config.validation_maze_seeds = vec![2001];
        config.validation_cadence = 2;
        config.checkpoint_every = 0;

        let full = run_experiment(&config, seed, None, None).unwrap();

        // Rebuild generation 3 by stepping a fresh population, then resume.
        let mut pop = Population::init(
            seed, config.pool_size, config.n_neurons,
            config.sigma_mut_init, config.bias_neuron, config.threshold_mutation_on,
        ).unwrap();
        let params = config.evolution_params();
        let training = config.training_mazes();
        for _ in 0..3 {
            evomaze::evolution::step_generation(&mut pop, &training, &params);
        }
        let checkpoint = Checkpoint::from_population(&pop, &config);
        let resumed = run_experiment(&config, seed, None, Some(checkpoint)).unwrap();

        prop_assert_eq!(&full.metrics[3..], &resumed.metrics[..]);
        prop_assert_eq!(&full.final_population.agents, &resumed.final_population.agents);
        prop_assert_eq!(full.final_validation(), resumed.final_validation());
    }
}
