//! Plain-text file formats: mazes (run-length encoded), genomes, step
//! traces and metric tables. Everything is diff-able text with an
//! embedded format version; float fields use the shortest round-trip
//! representation so load(save(x)) == x.

use crate::episode::TrajectoryStep;
use crate::error::Error;
use crate::evolution::GenerationMetrics;
use crate::maze::{Heading, Maze};
use crate::network::Genome;
use std::fmt::Write as _;

pub const MAZE_MAGIC: &str = "evomaze-maze v1";
pub const GENOME_MAGIC: &str = "evomaze-genome v1";
pub const TRACE_MAGIC: &str = "# evomaze-trace v1";
pub const METRICS_MAGIC: &str = "# evomaze-metrics v1";
pub const VALIDATION_MAGIC: &str = "# evomaze-validation v1";
pub const TIMINGS_MAGIC: &str = "# evomaze-timings v1";

pub fn maze_to_text(maze: &Maze) -> String {
    let mut out = String::new();
    writeln!(out, "{MAZE_MAGIC}").unwrap();
    writeln!(out, "seed {}", maze.seed).unwrap();
    writeln!(out, "width {}", maze.width).unwrap();
    writeln!(out, "height {}", maze.height).unwrap();
    for y in 0..maze.height {
        let mut tokens: Vec<String> = Vec::new();
        let mut run_wall = maze.is_wall(0, y);
        let mut run_len = 1usize;
        for x in 1..maze.width {
            let w = maze.is_wall(x, y);
            if w == run_wall {
                run_len += 1;
            } else {
                tokens.push(format!("{}{}", run_len, if run_wall { 'W' } else { 'F' }));
                run_wall = w;
                run_len = 1;
            }
        }
        tokens.push(format!("{}{}", run_len, if run_wall { 'W' } else { 'F' }));
        writeln!(out, "{}", tokens.join(" ")).unwrap();
    }
    out
}

fn header_field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str, Error> {
    let line = line.ok_or_else(|| Error::Format(format!("missing '{key}' line")))?;
    line.strip_prefix(key)
        .map(str::trim)
        .ok_or_else(|| Error::Format(format!("expected '{key} <value>', got '{line}'")))
}

pub fn maze_from_text(text: &str) -> Result<Maze, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(MAZE_MAGIC) => {}
        other => {
            return Err(Error::Format(format!(
                "bad maze header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let seed: u64 = header_field(lines.next(), "seed")?
        .parse()
        .map_err(|e| Error::Format(format!("seed: {e}")))?;
    let width: usize = header_field(lines.next(), "width")?
        .parse()
        .map_err(|e| Error::Format(format!("width: {e}")))?;
    let height: usize = header_field(lines.next(), "height")?
        .parse()
        .map_err(|e| Error::Format(format!("height: {e}")))?;
    let mut cells = Vec::with_capacity(width * height);
    for y in 0..height {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing row {y}")))?;
        let mut count_in_row = 0usize;
        for token in line.split_whitespace() {
            let (num, kind) = token.split_at(token.len() - 1);
            let len: usize = num
                .parse()
                .map_err(|e| Error::Format(format!("row {y}: {e}")))?;
            let wall = match kind {
                "W" => true,
                "F" => false,
                other => return Err(Error::Format(format!("row {y}: bad cell kind '{other}'"))),
            };
            cells.extend(std::iter::repeat(wall).take(len));
            count_in_row += len;
        }
        if count_in_row != width {
            return Err(Error::Format(format!(
                "row {y} has {count_in_row} cells, expected {width}"
            )));
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(Error::Format(format!("trailing content: '{extra}'")));
    }
    Ok(Maze::from_cells(width, height, seed, cells))
}

pub fn genome_to_text(genome: &Genome) -> String {
    let mut out = String::new();
    writeln!(out, "{GENOME_MAGIC}").unwrap();
    writeln!(out, "n {}", genome.n).unwrap();
    writeln!(out, "bias_neuron {}", genome.bias_neuron).unwrap();
    writeln!(out, "sigma_mut {:?}", genome.sigma_mut).unwrap();
    writeln!(out, "tau {:?}", genome.tau).unwrap();
    writeln!(out, "weights").unwrap();
    for row in genome.weights.chunks(genome.n) {
        let line: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    writeln!(out, "mask").unwrap();
    for row in genome.mask.chunks(genome.n) {
        let line: String = row.iter().map(|&m| if m { '1' } else { '0' }).collect();
        writeln!(out, "{line}").unwrap();
    }
    out
}

pub fn genome_from_text(text: &str) -> Result<Genome, Error> {
    let mut lines = text.lines();
    match lines.next() {
        Some(GENOME_MAGIC) => {}
        other => {
            return Err(Error::Format(format!(
                "bad genome header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let n: usize = header_field(lines.next(), "n")?
        .parse()
        .map_err(|e| Error::Format(format!("n: {e}")))?;
    let bias_neuron: bool = header_field(lines.next(), "bias_neuron")?
        .parse()
        .map_err(|e| Error::Format(format!("bias_neuron: {e}")))?;
    let sigma_mut: f64 = header_field(lines.next(), "sigma_mut")?
        .parse()
        .map_err(|e| Error::Format(format!("sigma_mut: {e}")))?;
    let tau: f64 = header_field(lines.next(), "tau")?
        .parse()
        .map_err(|e| Error::Format(format!("tau: {e}")))?;
    if lines.next() != Some("weights") {
        return Err(Error::Format("missing 'weights' section".into()));
    }
    let mut weights = Vec::with_capacity(n * n);
    for r in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing weight row {r}")))?;
        for tok in line.split_whitespace() {
            weights.push(
                tok.parse::<f64>()
                    .map_err(|e| Error::Format(format!("weight row {r}: {e}")))?,
            );
        }
        if weights.len() != (r + 1) * n {
            return Err(Error::Format(format!("weight row {r} has wrong arity")));
        }
    }
    if lines.next() != Some("mask") {
        return Err(Error::Format("missing 'mask' section".into()));
    }
    let mut mask = Vec::with_capacity(n * n);
    for r in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::Format(format!("missing mask row {r}")))?;
        if line.len() != n {
            return Err(Error::Format(format!("mask row {r} has wrong arity")));
        }
        for c in line.chars() {
            mask.push(match c {
                '1' => true,
                '0' => false,
                other => return Err(Error::Format(format!("mask row {r}: bad bit '{other}'"))),
            });
        }
    }
    if let Some(extra) = lines.find(|l| !l.trim().is_empty()) {
        return Err(Error::Format(format!("trailing content: '{extra}'")));
    }
    let g = Genome {
        n,
        weights,
        mask,
        sigma_mut,
        tau,
        bias_neuron,
    };
    if !g.mask_zero_coupled() {
        return Err(Error::Format(
            "genome violates mask/zero coupling: severed entry with non-zero weight".into(),
        ));
    }
    Ok(g)
}

fn heading_from_name(s: &str) -> Result<Heading, Error> {
    match s {
        "E" => Ok(Heading::East),
        "N" => Ok(Heading::North),
        "W" => Ok(Heading::West),
        "S" => Ok(Heading::South),
        other => Err(Error::Format(format!("bad heading '{other}'"))),
    }
}

/// Line-delimited trace: one record per step with pose, the seven sensor
/// values, all activations and the chosen action. With `products`, each
/// step is followed by `conn <target> <source> <weight*activation>` lines
/// for every active connection (source activation taken at that step).
pub fn trace_to_text(
    steps: &[TrajectoryStep],
    genome: Option<&Genome>,
    products: bool,
) -> String {
    let mut out = String::new();
    writeln!(out, "{TRACE_MAGIC}").unwrap();
    writeln!(
        out,
        "# columns: step x y heading d_left d_front d_right compass[4] activations[n] action"
    )
    .unwrap();
    let eff = genome.map(|g| (g.effective_weights(), g.n));
    for s in steps {
        let acts: Vec<String> = s.activations.iter().map(|a| format!("{a:?}")).collect();
        writeln!(
            out,
            "{} {} {} {} {} {} {} {:?} {:?} {:?} {:?} {} {}",
            s.step,
            s.agent.x,
            s.agent.y,
            s.agent.heading.name(),
            s.sensors.d_left,
            s.sensors.d_front,
            s.sensors.d_right,
            s.sensors.compass[0],
            s.sensors.compass[1],
            s.sensors.compass[2],
            s.sensors.compass[3],
            acts.join(" "),
            s.action.name()
        )
        .unwrap();
        if products {
            if let Some((eff, n)) = &eff {
                for target in 0..*n {
                    for source in 0..*n {
                        let w = eff[target * n + source];
                        if w != 0.0 {
                            let p = w * s.activations[source];
                            writeln!(out, "conn {target} {source} {p:?}").unwrap();
                        }
                    }
                }
            }
        }
    }
    out
}

/// Parse the per-step lines of a trace (conn lines are skipped), returning
/// (step, x, y, heading, action name) tuples. Used by replay tooling and
/// tests; the full float payload stays text-only.
pub fn trace_steps_from_text(
    text: &str,
) -> Result<Vec<(usize, usize, usize, Heading, String)>, Error> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("conn ") || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 5 {
            return Err(Error::Format(format!("short trace line: '{line}'")));
        }
        let step = fields[0]
            .parse()
            .map_err(|e| Error::Format(format!("step: {e}")))?;
        let x = fields[1]
            .parse()
            .map_err(|e| Error::Format(format!("x: {e}")))?;
        let y = fields[2]
            .parse()
            .map_err(|e| Error::Format(format!("y: {e}")))?;
        let heading = heading_from_name(fields[3])?;
        let action = fields.last().unwrap().to_string();
        out.push((step, x, y, heading, action));
    }
    Ok(out)
}

/// Metrics table as CSV with a commented header carrying the format
/// version and a single-line config snapshot.
pub fn metrics_to_csv(metrics: &[GenerationMetrics], config_json: &str) -> String {
    let mut out = String::new();
    writeln!(out, "{METRICS_MAGIC}").unwrap();
    writeln!(out, "# config {config_json}").unwrap();
    writeln!(
        out,
        "generation,best_fitness,mean_fitness,best_train_perf,mean_train_perf,mean_sparsity,mean_sigma_mut"
    )
    .unwrap();
    for m in metrics {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            m.generation,
            m.best_fitness,
            m.mean_fitness,
            m.best_train_perf,
            m.mean_train_perf,
            m.mean_sparsity,
            m.mean_sigma_mut
        )
        .unwrap();
    }
    out
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<GenerationMetrics>, Error> {
    let mut out = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("generation,") || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Format(format!("bad metrics row: '{line}'")));
        }
        let parse = |s: &str| -> Result<f64, Error> {
            s.parse().map_err(|e| Error::Format(format!("{s}: {e}")))
        };
        out.push(GenerationMetrics {
            generation: f[0]
                .parse()
                .map_err(|e| Error::Format(format!("generation: {e}")))?,
            best_fitness: parse(f[1])?,
            mean_fitness: parse(f[2])?,
            best_train_perf: parse(f[3])?,
            mean_train_perf: parse(f[4])?,
            mean_sparsity: parse(f[5])?,
            mean_sigma_mut: parse(f[6])?,
        });
    }
    Ok(out)
}
