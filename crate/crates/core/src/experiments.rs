//! Declarative experiment configurations, the run loop with checkpoints
//! and held-out validation, and the parameter sweeps.

use crate::error::Error;
use crate::evolution::{
    evaluate_metrics, step_generation, DistanceMetric, EvolutionParams, GenerationMetrics,
    Population, SparsityUnit,
};
use crate::maze::{generate_default_maze, Maze};
use crate::network::{Genome, DEFAULT_NEURONS, MIN_NEURONS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TRAINING_MAZE_SEEDS: [u64; 10] =
    [1001, 1002, 1003, 1004, 1005, 1006, 1007, 1008, 1009, 1010];
pub const DEFAULT_VALIDATION_MAZE_SEEDS: [u64; 10] =
    [2001, 2002, 2003, 2004, 2005, 2006, 2007, 2008, 2009, 2010];
/// Base for cross-validation bunch maze seeds, far from the shipped
/// training/validation seed ranges.
pub const CROSS_VALIDATION_SEED_BASE: u64 = 10_000_000;

/// Scale profile: `Desk` fits on a workstation, `Paper` matches the
/// original pool size and generation count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn pool_size(self) -> usize {
        match self {
            Profile::Desk => 200,
            Profile::Paper => 1000,
        }
    }

    pub fn generations(self) -> u64 {
        match self {
            Profile::Desk => 500,
            Profile::Paper => 5000,
        }
    }

    pub fn run_seeds(self) -> Vec<u64> {
        match self {
            Profile::Desk => vec![1, 2, 3],
            Profile::Paper => vec![1, 2, 3, 4, 5],
        }
    }
}

/// One experiment condition: a Table-1 style row plus seeds, scale and
/// feature flags. Unknown keys in config files are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub sigma_mut_init: f64,
    pub p_disconnect: f64,
    pub p_connect: f64,
    pub f_sparsity: f64,
    pub weight_mutation_on: bool,
    pub connection_mutation_on: bool,
    pub threshold_mutation_on: bool,
    pub bias_neuron: bool,
    pub sparsity_unit: SparsityUnit,
    pub distance_metric: DistanceMetric,
    pub pool_size: usize,
    pub generations: u64,
    pub n_neurons: usize,
    pub steps: usize,
    pub training_maze_seeds: Vec<u64>,
    pub validation_maze_seeds: Vec<u64>,
    pub run_seeds: Vec<u64>,
    /// Validate every this many generations (0 = only at the end).
    pub validation_cadence: u64,
    /// Checkpoint every this many generations (0 = only at the end).
    pub checkpoint_every: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.evolution_params().validate()?;
        if self.pool_size < 2 {
            return Err(Error::Config("pool_size must be at least 2".into()));
        }
        if self.n_neurons < MIN_NEURONS {
            return Err(Error::Config(format!(
                "n_neurons must be at least {MIN_NEURONS}"
            )));
        }
        if self.training_maze_seeds.is_empty() {
            return Err(Error::Config("need at least one training maze".into()));
        }
        if self.run_seeds.is_empty() {
            return Err(Error::Config("need at least one run seed".into()));
        }
        let train: HashSet<u64> = self.training_maze_seeds.iter().copied().collect();
        if self.validation_maze_seeds.iter().any(|s| train.contains(s)) {
            return Err(Error::Config(
                "training and validation maze seeds must be disjoint".into(),
            ));
        }
        Ok(())
    }

    pub fn evolution_params(&self) -> EvolutionParams {
        EvolutionParams {
            p_disconnect: self.p_disconnect,
            p_connect: self.p_connect,
            f_sparsity: self.f_sparsity,
            weight_mutation_on: self.weight_mutation_on,
            connection_mutation_on: self.connection_mutation_on,
            threshold_mutation_on: self.threshold_mutation_on,
            sparsity_unit: self.sparsity_unit,
            distance_metric: self.distance_metric,
            steps: self.steps,
        }
    }

    pub fn training_mazes(&self) -> Vec<Maze> {
        self.training_maze_seeds
            .iter()
            .map(|&s| generate_default_maze(s))
            .collect()
    }

    pub fn validation_mazes(&self) -> Vec<Maze> {
        self.validation_maze_seeds
            .iter()
            .map(|&s| generate_default_maze(s))
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<ExperimentConfig, Error> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

pub const TABLE1_NAMES: [&str; 6] = [
    "control",
    "connection severance",
    "connection severance (low rate)",
    "connection severance no mut",
    "connection severance sparsity reward",
    "sparsity reward",
];

/// Build the configuration for one experiment condition by name.
pub fn table1_config(name: &str, profile: Profile) -> Result<ExperimentConfig, Error> {
    // (sigma_mut, connection probs, f_sparsity, weight mutation)
    let (sigma_mut, conn, f_sparsity, weight_mut) = match name {
        "control" => (0.01, None, 0.0, true),
        "connection severance" => (0.01, Some(0.01), 0.0, true),
        "connection severance (low rate)" => (0.01, Some(0.001), 0.0, true),
        "connection severance no mut" => (0.0, Some(0.01), 0.0, false),
        "connection severance sparsity reward" => (0.01, Some(0.01), 0.1, true),
        "sparsity reward" => (0.01, None, 0.1, true),
        other => {
            return Err(Error::Config(format!(
                "unknown experiment '{other}'; expected one of {TABLE1_NAMES:?}"
            )))
        }
    };
    let config = ExperimentConfig {
        name: name.to_string(),
        sigma_mut_init: sigma_mut,
        p_disconnect: conn.unwrap_or(0.0),
        p_connect: conn.unwrap_or(0.0),
        f_sparsity,
        weight_mutation_on: weight_mut,
        connection_mutation_on: conn.is_some(),
        threshold_mutation_on: false,
        bias_neuron: true,
        sparsity_unit: SparsityUnit::Count,
        distance_metric: DistanceMetric::Final,
        pool_size: profile.pool_size(),
        generations: profile.generations(),
        n_neurons: DEFAULT_NEURONS,
        steps: crate::episode::DEFAULT_STEPS,
        training_maze_seeds: DEFAULT_TRAINING_MAZE_SEEDS.to_vec(),
        validation_maze_seeds: DEFAULT_VALIDATION_MAZE_SEEDS.to_vec(),
        run_seeds: profile.run_seeds(),
        validation_cadence: 10,
        checkpoint_every: 100,
    };
    config.validate()?;
    Ok(config)
}

/// Pool statistics of covered distance on one maze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeStats {
    pub maze_seed: u64,
    pub min: f64,
    pub p25: f64,
    pub mean: f64,
    pub p75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub per_maze: Vec<MazeStats>,
    /// Mean covered distance over all agents and mazes.
    pub overall_mean: f64,
}

/// Nearest-rank percentile on a sorted slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).max(1);
    sorted[rank - 1]
}

/// Run every agent through every maze and summarize the per-maze
/// distance distribution over the pool.
pub fn validate(
    pop: &Population,
    mazes: &[Maze],
    steps: usize,
    metric: DistanceMetric,
) -> ValidationSummary {
    // distances[agent][maze]
    let distances: Vec<Vec<f64>> = pop
        .agents
        .par_iter()
        .map(|g| {
            mazes
                .iter()
                .map(|m| {
                    let r = crate::episode::run_episode(m, g, steps, false)
                        .expect("episode on generated maze cannot fail");
                    match metric {
                        DistanceMetric::Final => r.distance as f64,
                        DistanceMetric::Max => r.max_distance as f64,
                    }
                })
                .collect()
        })
        .collect();
    let per_maze = mazes
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let mut d: Vec<f64> = distances.iter().map(|row| row[k]).collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            MazeStats {
                maze_seed: m.seed,
                min: d[0],
                p25: percentile(&d, 0.25),
                mean: d.iter().sum::<f64>() / d.len() as f64,
                p75: percentile(&d, 0.75),
                max: d[d.len() - 1],
            }
        })
        .collect();
    let total: f64 = distances.iter().flatten().sum();
    ValidationSummary {
        per_maze,
        overall_mean: total / (pop.agents.len() * mazes.len()) as f64,
    }
}

/// Population snapshot sufficient for bit-identical resumption: the RNG
/// surface is (master_seed, generation), so no sampler state is stored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub generation: u64,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub agents: Vec<Genome>,
}

impl Checkpoint {
    pub fn from_population(pop: &Population, config: &ExperimentConfig) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            generation: pop.generation,
            master_seed: pop.master_seed,
            config: config.clone(),
            agents: pop.agents.clone(),
        }
    }

    pub fn into_population(self) -> Population {
        Population {
            agents: self.agents,
            generation: self.generation,
            master_seed: self.master_seed,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Checkpoint, Error> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if c.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint format version {}",
                c.format_version
            )));
        }
        Ok(c)
    }
}

/// Everything one (config, run seed) training run produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub run_seed: u64,
    pub metrics: Vec<GenerationMetrics>,
    /// (generation, summary) pairs at the validation cadence.
    pub validations: Vec<(u64, ValidationSummary)>,
    pub final_population: Population,
    /// Wall-clock seconds per executed generation. Not deterministic;
    /// kept out of the metric files.
    pub generation_seconds: Vec<f64>,
}

impl RunRecord {
    pub fn final_validation(&self) -> &ValidationSummary {
        &self.validations.last().expect("at least final validation").1
    }

    pub fn final_mean_sparsity(&self) -> f64 {
        self.metrics.last().expect("at least one metrics row").mean_sparsity
    }

    /// Best agent of the final population by training fitness.
    pub fn best_genome(&self, mazes: &[Maze]) -> Genome {
        let params = self.config.evolution_params();
        let breakdowns = crate::evolution::evaluate(&self.final_population, mazes, &params);
        let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
        let best = crate::evolution::ranked_indices(&totals)[0];
        self.final_population.agents[best].clone()
    }
}

/// Files written for a run when an output directory is given.
pub struct RunLayout {
    pub dir: PathBuf,
}

impl RunLayout {
    pub fn new(dir: &Path) -> RunLayout {
        RunLayout {
            dir: dir.to_path_buf(),
        }
    }

    pub fn config_file(&self) -> PathBuf {
        self.dir.join("config.toml")
    }

    pub fn metrics_file(&self) -> PathBuf {
        self.dir.join("metrics.csv")
    }

    pub fn validation_file(&self) -> PathBuf {
        self.dir.join("validation.csv")
    }

    pub fn timings_file(&self) -> PathBuf {
        self.dir.join("timings.csv")
    }

    pub fn checkpoint_file(&self, generation: u64) -> PathBuf {
        self.dir.join(format!("checkpoints/gen_{generation:06}.json"))
    }

    pub fn final_population_file(&self) -> PathBuf {
        self.dir.join("final_population.json")
    }

    pub fn best_genome_file(&self) -> PathBuf {
        self.dir.join("best_genome.txt")
    }
}

fn config_json_line(config: &ExperimentConfig, run_seed: u64) -> String {
    serde_json::json!({
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "run_seed": run_seed,
        "config": config,
    })
    .to_string()
}

fn validation_csv(
    validations: &[(u64, ValidationSummary)],
    config_json: &str,
) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "{}", crate::io::VALIDATION_MAGIC).unwrap();
    writeln!(out, "# config {config_json}").unwrap();
    writeln!(out, "generation,maze_seed,min,p25,mean,p75,max").unwrap();
    for (gen, v) in validations {
        for s in &v.per_maze {
            writeln!(
                out,
                "{gen},{},{:?},{:?},{:?},{:?},{:?}",
                s.maze_seed, s.min, s.p25, s.mean, s.p75, s.max
            )
            .unwrap();
        }
        writeln!(out, "{gen},all,,,{:?},,", v.overall_mean).unwrap();
    }
    out
}

fn write_run_files(record: &RunRecord, layout: &RunLayout) -> Result<(), Error> {
    std::fs::create_dir_all(layout.dir.join("checkpoints"))?;
    let config_json = config_json_line(&record.config, record.run_seed);
    std::fs::write(layout.config_file(), record.config.to_toml())?;
    std::fs::write(
        layout.metrics_file(),
        crate::io::metrics_to_csv(&record.metrics, &config_json),
    )?;
    std::fs::write(
        layout.validation_file(),
        validation_csv(&record.validations, &config_json),
    )?;
    let mut timings = String::new();
    {
        use std::fmt::Write as _;
        writeln!(timings, "{}", crate::io::TIMINGS_MAGIC).unwrap();
        writeln!(timings, "# wall-clock only; excluded from determinism checks").unwrap();
        writeln!(timings, "generation,seconds").unwrap();
        let offset = record.final_population.generation - record.generation_seconds.len() as u64;
        for (k, s) in record.generation_seconds.iter().enumerate() {
            writeln!(timings, "{},{s:?}", offset + k as u64).unwrap();
        }
    }
    std::fs::write(layout.timings_file(), timings)?;
    let final_checkpoint = Checkpoint::from_population(&record.final_population, &record.config);
    std::fs::write(layout.final_population_file(), final_checkpoint.to_json())?;
    let best = record.best_genome(&record.config.training_mazes());
    std::fs::write(layout.best_genome_file(), crate::io::genome_to_text(&best))?;
    Ok(())
}

/// Train one run seed: the generational loop with checkpointing and
/// periodic validation. Deterministic per (config, run_seed); wall-clock
/// timings are the only non-reproducible output.
pub fn run_experiment(
    config: &ExperimentConfig,
    run_seed: u64,
    out_dir: Option<&Path>,
    resume_from: Option<Checkpoint>,
) -> Result<RunRecord, Error> {
    config.validate()?;
    let params = config.evolution_params();
    let training = config.training_mazes();
    let validation = config.validation_mazes();
    let layout = out_dir.map(RunLayout::new);

    let mut pop = match resume_from {
        Some(c) => {
            if c.config != *config {
                return Err(Error::Config(
                    "checkpoint config does not match the requested config".into(),
                ));
            }
            c.into_population()
        }
        None => Population::init(
            run_seed,
            config.pool_size,
            config.n_neurons,
            config.sigma_mut_init,
            config.bias_neuron,
            config.threshold_mutation_on,
        )?,
    };

    let mut metrics = Vec::new();
    let mut validations = Vec::new();
    let mut generation_seconds = Vec::new();

    while pop.generation < config.generations {
        let gen = pop.generation;
        if let Some(layout) = &layout {
            if config.checkpoint_every > 0 && gen % config.checkpoint_every == 0 {
                std::fs::create_dir_all(layout.dir.join("checkpoints"))?;
                let c = Checkpoint::from_population(&pop, config);
                std::fs::write(layout.checkpoint_file(gen), c.to_json())?;
            }
        }
        if config.validation_cadence > 0 && gen % config.validation_cadence == 0 {
            validations.push((
                gen,
                validate(&pop, &validation, config.steps, config.distance_metric),
            ));
        }
        let started = Instant::now();
        metrics.push(step_generation(&mut pop, &training, &params));
        generation_seconds.push(started.elapsed().as_secs_f64());
    }

    // Final evaluation of the finished population.
    metrics.push(evaluate_metrics(&pop, &training, &params));
    validations.push((
        pop.generation,
        validate(&pop, &validation, config.steps, config.distance_metric),
    ));

    let record = RunRecord {
        config: config.clone(),
        run_seed,
        metrics,
        validations,
        final_population: pop,
        generation_seconds,
    };
    if let Some(layout) = &layout {
        write_run_files(&record, layout)?;
    }
    Ok(record)
}

/// One run per p_connect value with p_disconnect and everything else
/// shared. Default axis: [0, 0.001, 0.01, 0.1].
pub fn sweep_connect_ratio(
    base: &ExperimentConfig,
    p_connect_values: &[f64],
    run_seed: u64,
    out_root: Option<&Path>,
) -> Result<Vec<(f64, RunRecord)>, Error> {
    p_connect_values
        .iter()
        .map(|&p| {
            let mut config = base.clone();
            config.name = format!("{} [p_connect={p}]", base.name);
            config.p_connect = p;
            config.connection_mutation_on = true;
            let dir = out_root.map(|r| r.join(format!("p_connect_{p}")));
            let record = run_experiment(&config, run_seed, dir.as_deref(), None)?;
            Ok((p, record))
        })
        .collect()
}

/// One run per network size; the initial weight scale follows the size.
pub fn sweep_network_size(
    base: &ExperimentConfig,
    sizes: &[usize],
    run_seed: u64,
    out_root: Option<&Path>,
) -> Result<Vec<(usize, RunRecord)>, Error> {
    sizes
        .iter()
        .map(|&n| {
            let mut config = base.clone();
            config.name = format!("{} [n={n}]", base.name);
            config.n_neurons = n;
            let dir = out_root.map(|r| r.join(format!("n_{n}")));
            let record = run_experiment(&config, run_seed, dir.as_deref(), None)?;
            Ok((n, record))
        })
        .collect()
}

/// One run per pool size; per-generation wall time is recorded in the
/// run's timing table.
pub fn sweep_population_size(
    base: &ExperimentConfig,
    sizes: &[usize],
    run_seed: u64,
    out_root: Option<&Path>,
) -> Result<Vec<(usize, RunRecord)>, Error> {
    sizes
        .iter()
        .map(|&size| {
            let mut config = base.clone();
            config.name = format!("{} [pool={size}]", base.name);
            config.pool_size = size;
            let dir = out_root.map(|r| r.join(format!("pool_{size}")));
            let record = run_experiment(&config, run_seed, dir.as_deref(), None)?;
            Ok((size, record))
        })
        .collect()
}

/// Mean covered distance of one genome over `bunches` bunches of fresh
/// unseen mazes. Bunch maze seeds are derived from `seed` above
/// CROSS_VALIDATION_SEED_BASE and must not collide with training seeds.
pub fn cross_validate(
    best: &Genome,
    bunches: usize,
    mazes_per_bunch: usize,
    seed: u64,
    training_seeds: &[u64],
    steps: usize,
) -> Result<Vec<f64>, Error> {
    let train: HashSet<u64> = training_seeds.iter().copied().collect();
    let mut means = Vec::with_capacity(bunches);
    for b in 0..bunches {
        let mut total = 0.0;
        for m in 0..mazes_per_bunch {
            let maze_seed = CROSS_VALIDATION_SEED_BASE
                + seed * 1_000_000
                + (b * mazes_per_bunch + m) as u64;
            if train.contains(&maze_seed) {
                return Err(Error::Config(format!(
                    "cross-validation maze seed {maze_seed} collides with a training seed"
                )));
            }
            let maze = generate_default_maze(maze_seed);
            total += crate::episode::run_episode(&maze, best, steps, false)?.distance as f64;
        }
        means.push(total / mazes_per_bunch as f64);
    }
    Ok(means)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        let mut c = table1_config("connection severance", Profile::Desk).unwrap();
        c.pool_size = 8;
        c.generations = 4;
        c.validation_cadence = 2;
        c.checkpoint_every = 2;
        c.training_maze_seeds = vec![1001, 1002];
        c.validation_maze_seeds = vec![2001, 2002];
        c.steps = 50;
        c
    }

    #[test]
    fn table1_rows_match_settings() {
        let c = table1_config("control", Profile::Desk).unwrap();
        assert!(!c.connection_mutation_on);
        assert_eq!(c.sigma_mut_init, 0.01);
        assert_eq!(c.f_sparsity, 0.0);

        let c = table1_config("connection severance", Profile::Desk).unwrap();
        assert_eq!(c.p_connect, 0.01);
        assert_eq!(c.p_disconnect, 0.01);

        let c = table1_config("connection severance (low rate)", Profile::Desk).unwrap();
        assert_eq!(c.p_connect, 0.001);

        let c = table1_config("connection severance no mut", Profile::Desk).unwrap();
        assert!(!c.weight_mutation_on);
        assert!(c.connection_mutation_on);

        let c = table1_config("connection severance sparsity reward", Profile::Desk).unwrap();
        assert_eq!(c.f_sparsity, 0.1);
        assert_eq!(c.p_disconnect, 0.01);

        let c = table1_config("sparsity reward", Profile::Desk).unwrap();
        assert_eq!(c.f_sparsity, 0.1);
        assert!(!c.connection_mutation_on);

        assert!(table1_config("bogus", Profile::Desk).is_err());
    }

    #[test]
    fn desk_and_paper_profiles() {
        let desk = table1_config("control", Profile::Desk).unwrap();
        assert_eq!((desk.pool_size, desk.generations), (200, 500));
        assert_eq!(desk.run_seeds, vec![1, 2, 3]);
        let paper = table1_config("control", Profile::Paper).unwrap();
        assert_eq!((paper.pool_size, paper.generations), (1000, 5000));
        assert_eq!(paper.run_seeds.len(), 5);
    }

    #[test]
    fn shipped_seed_sets_are_disjoint() {
        for name in TABLE1_NAMES {
            let c = table1_config(name, Profile::Desk).unwrap();
            c.validate().unwrap();
        }
    }

    #[test]
    fn config_toml_round_trip_rejects_unknown_keys() {
        let c = tiny_config();
        let text = c.to_toml();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(c, back);
        let bad = format!("{text}\nbogus_key = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn overlapping_seed_sets_rejected() {
        let mut c = tiny_config();
        c.validation_maze_seeds = vec![1001];
        assert!(c.validate().is_err());
    }

    #[test]
    fn run_is_deterministic() {
        let c = tiny_config();
        let a = run_experiment(&c, 1, None, None).unwrap();
        let b = run_experiment(&c, 1, None, None).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.validations, b.validations);
        for (x, y) in a
            .final_population
            .agents
            .iter()
            .zip(&b.final_population.agents)
        {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn zero_generations_yields_single_evaluation() {
        let mut c = tiny_config();
        c.generations = 0;
        let r = run_experiment(&c, 1, None, None).unwrap();
        assert_eq!(r.metrics.len(), 1);
        assert_eq!(r.metrics[0].generation, 0);
    }

    #[test]
    fn metrics_cover_every_generation_plus_final() {
        let c = tiny_config();
        let r = run_experiment(&c, 1, None, None).unwrap();
        assert_eq!(r.metrics.len(), c.generations as usize + 1);
        for (k, m) in r.metrics.iter().enumerate() {
            assert_eq!(m.generation, k as u64);
        }
    }

    #[test]
    fn validation_degenerate_pool() {
        let c = tiny_config();
        let mut pop = Population::init(1, 4, 16, 0.01, true, false).unwrap();
        let g = pop.agents[0].clone();
        for a in &mut pop.agents {
            *a = g.clone();
        }
        let v = validate(&pop, &c.validation_mazes(), 50, DistanceMetric::Final);
        for s in &v.per_maze {
            assert_eq!(s.min, s.max);
            assert_eq!(s.min, s.mean);
        }
    }

    #[test]
    fn checkpoint_json_round_trip() {
        let c = tiny_config();
        let pop = Population::init(1, 4, 16, 0.01, true, false).unwrap();
        let ck = Checkpoint::from_population(&pop, &c);
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back.generation, 0);
        assert_eq!(back.agents, pop.agents);
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let c = tiny_config();
        let full = run_experiment(&c, 1, None, None).unwrap();

        let mut half = c.clone();
        half.generations = 2;
        let partial = run_experiment(&half, 1, None, None).unwrap();
        let ck = Checkpoint::from_population(&partial.final_population, &c);
        let resumed = run_experiment(&c, 1, None, Some(ck)).unwrap();

        assert_eq!(
            full.final_population.agents,
            resumed.final_population.agents
        );
        // Post-resume metric rows equal the uninterrupted rows.
        assert_eq!(&full.metrics[2..], &resumed.metrics[..]);
    }

    #[test]
    fn cross_validate_is_deterministic_and_bounded() {
        let g = Population::init(1, 2, 16, 0.01, true, false)
            .unwrap()
            .agents[0]
            .clone();
        let a = cross_validate(&g, 5, 3, 0, &DEFAULT_TRAINING_MAZE_SEEDS, 100).unwrap();
        let b = cross_validate(&g, 5, 3, 0, &DEFAULT_TRAINING_MAZE_SEEDS, 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|&m| (0.0..=399.0).contains(&m)));
    }
}
