//! Command-line entry point: maze generation, training, validation,
//! sweeps, analyses and trajectory replay. All outputs are plain-text,
//! self-describing and byte-reproducible (wall-clock timing tables
//! excepted); parallelism never changes an output byte.

use clap::{Parser, Subcommand, ValueEnum};
use evomaze::analysis;
use evomaze::episode::{run_episode, DEFAULT_STEPS};
use evomaze::error::Error;
use evomaze::experiments::{
    cross_validate, run_experiment, sweep_connect_ratio, sweep_network_size,
    sweep_population_size, table1_config, validate, Checkpoint, ExperimentConfig, Profile,
};
use evomaze::io;
use evomaze::maze::{generate_maze, Maze, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use evomaze::network::Genome;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable providing the default output directory.
const OUT_DIR_ENV: &str = "EVOMAZE_OUT_DIR";

#[derive(Parser)]
#[command(name = "evomaze", version, about = "Evolve sparse recurrent networks on grid mazes")]
struct Cli {
    /// Worker threads for parallel evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Desk,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Profile {
        match p {
            ProfileArg::Desk => Profile::Desk,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepAxis {
    PConnect,
    NetworkSize,
    PopulationSize,
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzeWhat {
    Histogram,
    Sparsity,
    Correlation,
    Active,
    PruneCurve,
    Components,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a maze file.
    GenerateMaze {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_WIDTH)]
        width: usize,
        #[arg(long, default_value_t = DEFAULT_HEIGHT)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one experiment condition (all configured run seeds).
    Train {
        /// Table-1 condition name, e.g. "connection severance".
        #[arg(long, conflicts_with = "config")]
        experiment: Option<String>,
        /// Experiment config file (TOML); unknown keys are rejected.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long)]
        sigma_mut: Option<f64>,
        #[arg(long)]
        p_disconnect: Option<f64>,
        #[arg(long)]
        p_connect: Option<f64>,
        #[arg(long)]
        f_sparsity: Option<f64>,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        generations: Option<u64>,
        /// Run only this master seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        checkpoint_every: Option<u64>,
        /// Resume from a checkpoint file.
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate a checkpointed population on held-out mazes.
    Validate {
        /// Checkpoint or final_population file.
        #[arg(long)]
        population: PathBuf,
        /// Comma-separated maze seeds; defaults to the config's validation set.
        #[arg(long, value_delimiter = ',')]
        maze_seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a one-axis parameter sweep.
    Sweep {
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long, default_value = "connection severance")]
        experiment: String,
        #[arg(long, value_enum, default_value_t = ProfileArg::Desk)]
        profile: ProfileArg,
        #[arg(long)]
        pool_size: Option<usize>,
        #[arg(long)]
        generations: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Post-hoc analysis of a finished run directory.
    Analyze {
        /// Run directory (repeatable for correlation).
        #[arg(long, required = true)]
        run_dir: Vec<PathBuf>,
        #[arg(long, value_enum)]
        what: AnalyzeWhat,
        #[arg(long, default_value_t = 51)]
        bins: usize,
        /// Explicit ascending thresholds for the prune curve.
        #[arg(long, value_delimiter = ',')]
        thresholds: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a genome on a maze and write the per-step trace.
    Replay {
        #[arg(long)]
        genome: PathBuf,
        /// Maze file path, or a bare integer seed for a default maze.
        #[arg(long)]
        maze: String,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a genome on bunches of fresh unseen mazes.
    CrossValidate {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long, default_value_t = 100)]
        bunches: usize,
        #[arg(long, default_value_t = 10)]
        mazes_per_bunch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .expect("thread pool setup");
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn slug(name: &str) -> String {
    let mut out = String::new();
    let mut last_sep = true;
    for c in name.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_sep = false;
        } else if !last_sep {
            out.push('_');
            last_sep = true;
        }
    }
    out.trim_end_matches('_').to_string()
}

fn load_genome(path: &Path) -> Result<Genome, Error> {
    io::genome_from_text(&std::fs::read_to_string(path)?)
}

fn load_maze_arg(arg: &str) -> Result<Maze, Error> {
    if let Ok(seed) = arg.parse::<u64>() {
        return Ok(evomaze::maze::generate_default_maze(seed));
    }
    io::maze_from_text(&std::fs::read_to_string(Path::new(arg))?)
}

fn run_dir_checkpoint(run_dir: &Path) -> Result<Checkpoint, Error> {
    let path = run_dir.join("final_population.json");
    Checkpoint::from_json(&std::fs::read_to_string(path)?)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::GenerateMaze {
            seed,
            width,
            height,
            out,
        } => {
            let maze = generate_maze(
                seed,
                width,
                height,
                evomaze::maze::DEFAULT_SPACING,
                evomaze::maze::DEFAULT_WALL_LENGTH,
                evomaze::maze::DEFAULT_SAME_SIDE_PROB,
            )?;
            std::fs::write(&out, io::maze_to_text(&maze))?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Train {
            experiment,
            config,
            profile,
            sigma_mut,
            p_disconnect,
            p_connect,
            f_sparsity,
            pool_size,
            generations,
            seed,
            checkpoint_every,
            resume,
            out_dir,
        } => {
            let mut cfg = match (&experiment, &config) {
                (Some(name), None) => table1_config(name, profile.into())?,
                (None, Some(path)) => {
                    ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?
                }
                (None, None) => {
                    return Err(Error::Config(
                        "pass --experiment <name> or --config <file>".into(),
                    ))
                }
                (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
            };
            if let Some(v) = sigma_mut {
                cfg.sigma_mut_init = v;
                cfg.weight_mutation_on = v != 0.0;
            }
            if let Some(v) = p_disconnect {
                cfg.p_disconnect = v;
                cfg.connection_mutation_on = true;
            }
            if let Some(v) = p_connect {
                cfg.p_connect = v;
                cfg.connection_mutation_on = true;
            }
            if let Some(v) = f_sparsity {
                cfg.f_sparsity = v;
            }
            if let Some(v) = pool_size {
                cfg.pool_size = v;
            }
            if let Some(v) = generations {
                cfg.generations = v;
            }
            if let Some(v) = checkpoint_every {
                cfg.checkpoint_every = v;
            }
            cfg.validate()?;

            let root = out_dir.unwrap_or_else(default_out_dir);
            let seeds = match seed {
                Some(s) => vec![s],
                None => cfg.run_seeds.clone(),
            };
            let resume_ck = resume
                .map(|p| Checkpoint::from_json(&std::fs::read_to_string(p)?))
                .transpose()?;
            if resume_ck.is_some() && seeds.len() != 1 {
                return Err(Error::Config(
                    "--resume needs a single --seed matching the checkpoint".into(),
                ));
            }
            for s in seeds {
                let dir = root.join(slug(&cfg.name)).join(format!("seed_{s}"));
                let ck = resume_ck.clone();
                run_experiment(&cfg, s, Some(&dir), ck)?;
                println!("wrote {}", dir.display());
            }
            Ok(())
        }

        Command::Validate {
            population,
            maze_seeds,
            out,
        } => {
            let ck = Checkpoint::from_json(&std::fs::read_to_string(&population)?)?;
            let seeds = if maze_seeds.is_empty() {
                ck.config.validation_maze_seeds.clone()
            } else {
                maze_seeds
            };
            for s in &seeds {
                if ck.config.training_maze_seeds.contains(s) {
                    return Err(Error::Config(format!(
                        "maze seed {s} was used for training; validation mazes must be unseen"
                    )));
                }
            }
            let mazes: Vec<Maze> = seeds
                .iter()
                .map(|&s| evomaze::maze::generate_default_maze(s))
                .collect();
            let config = ck.config.clone();
            let pop = ck.into_population();
            let summary = validate(&pop, &mazes, config.steps, config.distance_metric);
            let mut text = String::new();
            writeln!(text, "{}", io::VALIDATION_MAGIC).unwrap();
            writeln!(
                text,
                "# config {}",
                serde_json::json!({"config": config, "generation": pop.generation})
            )
            .unwrap();
            writeln!(text, "generation,maze_seed,min,p25,mean,p75,max").unwrap();
            for s in &summary.per_maze {
                writeln!(
                    text,
                    "{},{},{:?},{:?},{:?},{:?},{:?}",
                    pop.generation, s.maze_seed, s.min, s.p25, s.mean, s.p75, s.max
                )
                .unwrap();
            }
            writeln!(text, "{},all,,,{:?},,", pop.generation, summary.overall_mean).unwrap();
            std::fs::write(&out, text)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Sweep {
            axis,
            values,
            experiment,
            profile,
            pool_size,
            generations,
            seed,
            out_dir,
        } => {
            let mut base = table1_config(&experiment, profile.into())?;
            if let Some(v) = pool_size {
                base.pool_size = v;
            }
            if let Some(v) = generations {
                base.generations = v;
            }
            let root = out_dir.unwrap_or_else(default_out_dir).join(match axis {
                SweepAxis::PConnect => "sweep_p_connect",
                SweepAxis::NetworkSize => "sweep_network_size",
                SweepAxis::PopulationSize => "sweep_population_size",
            });
            let seeds = match seed {
                Some(s) => vec![s],
                None => base.run_seeds.clone(),
            };
            for s in seeds {
                let seed_root = root.join(format!("seed_{s}"));
                match axis {
                    SweepAxis::PConnect => {
                        let vals: Vec<f64> = if values.is_empty() {
                            vec![0.0, 0.001, 0.01, 0.1]
                        } else {
                            parse_values(&values)?
                        };
                        sweep_connect_ratio(&base, &vals, s, Some(&seed_root))?;
                    }
                    SweepAxis::NetworkSize => {
                        let vals: Vec<usize> = if values.is_empty() {
                            vec![11, 16, 24, 32]
                        } else {
                            parse_values(&values)?
                        };
                        sweep_network_size(&base, &vals, s, Some(&seed_root))?;
                    }
                    SweepAxis::PopulationSize => {
                        let vals: Vec<usize> = if values.is_empty() {
                            vec![50, 100, 200, 1000]
                        } else {
                            parse_values(&values)?
                        };
                        sweep_population_size(&base, &vals, s, Some(&seed_root))?;
                    }
                }
                println!("wrote {}", seed_root.display());
            }
            Ok(())
        }

        Command::Analyze {
            run_dir,
            what,
            bins,
            thresholds,
            out,
        } => {
            let text = analyze(&run_dir, what, bins, &thresholds)?;
            std::fs::write(&out, text)?;
            println!("wrote {}", out.display());
            Ok(())
        }

        Command::Replay {
            genome,
            maze,
            steps,
            out,
        } => {
            let genome = load_genome(&genome)?;
            let maze = load_maze_arg(&maze)?;
            let result = run_episode(&maze, &genome, steps, true)?;
            let trace = io::trace_to_text(
                result.trajectory.as_deref().unwrap(),
                Some(&genome),
                true,
            );
            std::fs::write(&out, trace)?;
            println!(
                "wrote {} (distance {}, mean activation {:?})",
                out.display(),
                result.distance,
                result.mean_activation
            );
            Ok(())
        }

        Command::CrossValidate {
            genome,
            bunches,
            mazes_per_bunch,
            seed,
            out,
        } => {
            let g = load_genome(&genome)?;
            let means = cross_validate(
                &g,
                bunches,
                mazes_per_bunch,
                seed,
                &evomaze::experiments::DEFAULT_TRAINING_MAZE_SEEDS,
                DEFAULT_STEPS,
            )?;
            let mut text = String::new();
            writeln!(text, "# evomaze-crossval v1").unwrap();
            writeln!(
                text,
                "# bunches {bunches} mazes_per_bunch {mazes_per_bunch} seed {seed}"
            )
            .unwrap();
            writeln!(text, "bunch,mean_distance").unwrap();
            for (b, m) in means.iter().enumerate() {
                writeln!(text, "{b},{m:?}").unwrap();
            }
            std::fs::write(&out, text)?;
            println!("wrote {}", out.display());
            Ok(())
        }
    }
}

fn parse_values<T: std::str::FromStr>(values: &[String]) -> Result<Vec<T>, Error>
where
    T::Err: std::fmt::Display,
{
    values
        .iter()
        .map(|v| {
            v.parse::<T>()
                .map_err(|e| Error::Parameter(format!("bad sweep value '{v}': {e}")))
        })
        .collect()
}

fn analyze(
    run_dirs: &[PathBuf],
    what: AnalyzeWhat,
    bins: usize,
    thresholds: &[f64],
) -> Result<String, Error> {
    let mut out = String::new();
    match what {
        AnalyzeWhat::Histogram => {
            let ck = run_dir_checkpoint(&run_dirs[0])?;
            let h = analysis::weight_histogram(ck.agents.iter(), bins)?;
            writeln!(out, "# evomaze-histogram v1").unwrap();
            writeln!(out, "# zero connections excluded").unwrap();
            writeln!(out, "# negative_fraction {:?}", h.negative_fraction).unwrap();
            writeln!(out, "# total_nonzero {}", h.total_nonzero).unwrap();
            writeln!(out, "bin_lo,bin_hi,count").unwrap();
            for (k, c) in h.counts.iter().enumerate() {
                writeln!(out, "{:?},{:?},{c}", h.edges[k], h.edges[k + 1]).unwrap();
            }
        }
        AnalyzeWhat::Sparsity => {
            let metrics =
                io::metrics_from_csv(&std::fs::read_to_string(run_dirs[0].join("metrics.csv"))?)?;
            writeln!(out, "# evomaze-sparsity v1").unwrap();
            writeln!(out, "generation,mean_sparsity").unwrap();
            for m in &metrics {
                writeln!(out, "{},{:?}", m.generation, m.mean_sparsity).unwrap();
            }
        }
        AnalyzeWhat::Correlation => {
            if run_dirs.len() < 3 {
                return Err(Error::Parameter(
                    "correlation needs at least 3 run directories".into(),
                ));
            }
            let mut pairs = Vec::new();
            let mut rows = Vec::new();
            for dir in run_dirs {
                let metrics =
                    io::metrics_from_csv(&std::fs::read_to_string(dir.join("metrics.csv"))?)?;
                let sparsity = metrics
                    .last()
                    .ok_or_else(|| Error::Format("empty metrics table".into()))?
                    .mean_sparsity;
                let validation = final_validation_mean(&dir.join("validation.csv"))?;
                pairs.push((sparsity, validation));
                rows.push((dir.display().to_string(), sparsity, validation));
            }
            let tau = analysis::rank_correlation(&pairs)?;
            writeln!(out, "# evomaze-correlation v1").unwrap();
            writeln!(out, "# rank_correlation {tau:?}").unwrap();
            writeln!(out, "run_dir,final_mean_sparsity,final_validation_mean").unwrap();
            for (d, s, v) in rows {
                writeln!(out, "{d},{s:?},{v:?}").unwrap();
            }
        }
        AnalyzeWhat::Active => {
            let ck = run_dir_checkpoint(&run_dirs[0])?;
            let genome = load_genome(&run_dirs[0].join("best_genome.txt"))?;
            let params = ck.config.evolution_params();
            let mazes = ck.config.training_mazes();
            let probe = analysis::active_connections(&genome, &mazes, &params, 0.0);
            writeln!(out, "# evomaze-active-connections v1").unwrap();
            writeln!(out, "# baseline_fitness {:?}", probe.baseline_fitness).unwrap();
            writeln!(out, "# nonzero {}", genome.count_nonzero_effective()).unwrap();
            writeln!(out, "# active {}", probe.active_count).unwrap();
            writeln!(out, "target,source").unwrap();
            let mut prunable = probe.prunable.clone();
            prunable.sort_unstable();
            for (t, s) in prunable {
                writeln!(out, "{t},{s}").unwrap();
            }
        }
        AnalyzeWhat::PruneCurve => {
            let ck = run_dir_checkpoint(&run_dirs[0])?;
            let genome = load_genome(&run_dirs[0].join("best_genome.txt"))?;
            let mazes = ck.config.validation_mazes();
            let ts: Vec<f64> = if thresholds.is_empty() {
                let max_w = genome
                    .weights
                    .iter()
                    .fold(0.0f64, |a, &w| a.max(w.abs()));
                (0..=50).map(|k| k as f64 * max_w / 50.0).collect()
            } else {
                thresholds.to_vec()
            };
            let curve =
                analysis::threshold_prune_curve(&genome, &mazes, &ts, ck.config.steps)?;
            writeln!(out, "# evomaze-prune-curve v1").unwrap();
            writeln!(out, "threshold,remaining_connections,validation_performance").unwrap();
            for k in 0..curve.thresholds.len() {
                writeln!(
                    out,
                    "{:?},{},{:?}",
                    curve.thresholds[k],
                    curve.remaining_connections[k],
                    curve.validation_performance[k]
                )
                .unwrap();
            }
        }
        AnalyzeWhat::Components => {
            let genome = load_genome(&run_dirs[0].join("best_genome.txt"))?;
            let c = analysis::subnetwork_components(&genome);
            writeln!(out, "# evomaze-components v1").unwrap();
            writeln!(out, "component,neurons,pseudo_complexity").unwrap();
            for (k, comp) in c.components.iter().enumerate() {
                let neurons: Vec<String> = comp.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{k},{},{}", neurons.join(" "), c.pseudo_complexity[k]).unwrap();
            }
        }
    }
    Ok(out)
}

/// Overall mean from the last "all" row of a validation table.
fn final_validation_mean(path: &Path) -> Result<f64, Error> {
    let text = std::fs::read_to_string(path)?;
    let mut last = None;
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("generation,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() == 7 && fields[1] == "all" {
            last = Some(
                fields[4]
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("overall mean: {e}")))?,
            );
        }
    }
    last.ok_or_else(|| Error::Format(format!("no overall row in {}", path.display())))
}
