//! Procedural grid mazes, agent kinematics and ray-cast sensing.
//!
//! A maze is a rectangular grid of wall/free cells. The border is always
//! wall; interior walls are vertical segments attached to the top or
//! bottom border, placed left to right with random spacing. The agent
//! walks on free cells, senses wall distances along body-relative rays
//! and moves with three discrete actions.

use crate::error::Error;
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::RangeInclusive;

pub const DEFAULT_WIDTH: usize = 400;
pub const DEFAULT_HEIGHT: usize = 22;
pub const DEFAULT_SPACING: RangeInclusive<usize> = 2..=10;
pub const DEFAULT_WALL_LENGTH: RangeInclusive<usize> = 4..=20;
pub const DEFAULT_SAME_SIDE_PROB: f64 = 0.25;
/// Sensor distances saturate at this many free cells.
pub const VISION_RANGE: u32 = 10;

/// Absolute heading. North is -y; TurnLeft rotates East -> North.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub fn left(self) -> Heading {
        match self {
            Heading::East => Heading::North,
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
        }
    }

    pub fn right(self) -> Heading {
        match self {
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
            Heading::North => Heading::East,
        }
    }

    /// Unit step (dx, dy) for one cell of forward motion.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::East => (1, 0),
            Heading::North => (0, -1),
            Heading::West => (-1, 0),
            Heading::South => (0, 1),
        }
    }

    /// Index into the one-hot compass encoding (East, North, West, South).
    pub fn compass_index(self) -> usize {
        match self {
            Heading::East => 0,
            Heading::North => 1,
            Heading::West => 2,
            Heading::South => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Heading::East => "E",
            Heading::North => "N",
            Heading::West => "W",
            Heading::South => "S",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Straight,
    TurnRight,
    TurnLeft,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Straight => "straight",
            Action::TurnRight => "turn_right",
            Action::TurnLeft => "turn_left",
        }
    }
}

/// Immutable grid maze. `cells[y * width + x]` is true for wall cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Maze {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    cells: Vec<bool>,
}

impl Maze {
    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.cells[y * self.width + x]
    }

    pub fn is_free(&self, x: usize, y: usize) -> bool {
        !self.is_wall(x, y)
    }

    pub(crate) fn from_cells(width: usize, height: usize, seed: u64, cells: Vec<bool>) -> Maze {
        assert_eq!(cells.len(), width * height);
        Maze {
            width,
            height,
            seed,
            cells,
        }
    }
}

/// Agent pose during an episode. Always on a free cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub x: usize,
    pub y: usize,
    pub heading: Heading,
}

/// Clamped wall distances plus the one-hot compass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    pub d_left: u32,
    pub d_front: u32,
    pub d_right: u32,
    pub compass: [f64; 4],
}

impl SensorReading {
    /// The seven input-neuron values: distances (left, front, right),
    /// then the compass one-hot (East, North, West, South).
    pub fn inputs(&self) -> [f64; 7] {
        [
            self.d_left as f64,
            self.d_front as f64,
            self.d_right as f64,
            self.compass[0],
            self.compass[1],
            self.compass[2],
            self.compass[3],
        ]
    }
}

/// Generate a maze: bordered grid with vertical interior walls every
/// `spacing` cells, each `length` cells long, hanging from the top or
/// bottom border. Same seed, same maze.
pub fn generate_maze(
    seed: u64,
    width: usize,
    height: usize,
    spacing: RangeInclusive<usize>,
    length: RangeInclusive<usize>,
    same_side_prob: f64,
) -> Result<Maze, Error> {
    if width < 3 || height < 3 {
        return Err(Error::Parameter(format!(
            "maze dimensions must be at least 3x3, got {width}x{height}"
        )));
    }
    if spacing.is_empty() || length.is_empty() {
        return Err(Error::Parameter("empty spacing or length range".into()));
    }
    if *spacing.start() == 0 || *length.start() == 0 {
        return Err(Error::Parameter(
            "spacing and length draws must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&same_side_prob) {
        return Err(Error::Parameter(format!(
            "same_side_prob must be in [0,1], got {same_side_prob}"
        )));
    }

    let mut rng = rng::maze_stream(seed);
    let mut cells = vec![false; width * height];
    for x in 0..width {
        cells[x] = true; // top border
        cells[(height - 1) * width + x] = true; // bottom border
    }
    for y in 0..height {
        cells[y * width] = true; // left border
        cells[y * width + width - 1] = true; // right border
    }

    let interior_height = height - 2;
    // A wall must leave >= 2 free interior cells in its column.
    let max_wall = interior_height.saturating_sub(2);

    let mut x = rng.gen_range(spacing.clone());
    let mut last_from_top: Option<bool> = None;
    while x <= width.saturating_sub(2) && max_wall >= *length.start() {
        let mut len = rng.gen_range(length.clone());
        while len > max_wall {
            len = rng.gen_range(length.clone());
        }
        let from_top = match last_from_top {
            // First wall: side chosen uniformly.
            None => rng.gen_bool(0.5),
            Some(last) => {
                if rng.gen_bool(same_side_prob) {
                    last
                } else {
                    !last
                }
            }
        };
        last_from_top = Some(from_top);
        for k in 0..len {
            let y = if from_top { 1 + k } else { height - 2 - k };
            cells[y * width + x] = true;
        }
        x += rng.gen_range(spacing.clone());
    }

    Ok(Maze::from_cells(width, height, seed, cells))
}

/// Maze with all default generation parameters.
pub fn generate_default_maze(seed: u64) -> Maze {
    generate_maze(
        seed,
        DEFAULT_WIDTH,
        DEFAULT_HEIGHT,
        DEFAULT_SPACING,
        DEFAULT_WALL_LENGTH,
        DEFAULT_SAME_SIDE_PROB,
    )
    .expect("default parameters are valid")
}

/// Start pose: first interior column, centermost free cell (ties toward
/// smaller y), facing East.
pub fn start_state(maze: &Maze) -> Result<AgentState, Error> {
    let free: Vec<usize> = (0..maze.height).filter(|&y| maze.is_free(1, y)).collect();
    if free.is_empty() {
        return Err(Error::InvalidMaze(
            "column 1 has no free cell to start from".into(),
        ));
    }
    let y = free[(free.len() - 1) / 2];
    Ok(AgentState {
        x: 1,
        y,
        heading: Heading::East,
    })
}

/// Count free cells along a ray from (x, y) in direction (dx, dy) before
/// the first wall, clamped to VISION_RANGE.
fn ray_distance(maze: &Maze, x: usize, y: usize, dx: isize, dy: isize) -> u32 {
    let mut d = 0u32;
    let (mut cx, mut cy) = (x as isize, y as isize);
    while d < VISION_RANGE {
        cx += dx;
        cy += dy;
        // The border guarantees the ray hits a wall before leaving the grid.
        if maze.is_wall(cx as usize, cy as usize) {
            break;
        }
        d += 1;
    }
    d
}

/// Body-relative wall distances and the compass one-hot for the pose.
pub fn sense(maze: &Maze, agent: &AgentState) -> SensorReading {
    let (fx, fy) = agent.heading.delta();
    let (lx, ly) = agent.heading.left().delta();
    let (rx, ry) = agent.heading.right().delta();
    let mut compass = [0.0; 4];
    compass[agent.heading.compass_index()] = 1.0;
    SensorReading {
        d_left: ray_distance(maze, agent.x, agent.y, lx, ly),
        d_front: ray_distance(maze, agent.x, agent.y, fx, fy),
        d_right: ray_distance(maze, agent.x, agent.y, rx, ry),
        compass,
    }
}

/// Turns rotate in place; Straight advances one cell unless blocked.
pub fn apply_action(maze: &Maze, agent: &AgentState, action: Action) -> AgentState {
    match action {
        Action::TurnLeft => AgentState {
            heading: agent.heading.left(),
            ..*agent
        },
        Action::TurnRight => AgentState {
            heading: agent.heading.right(),
            ..*agent
        },
        Action::Straight => {
            let (dx, dy) = agent.heading.delta();
            let nx = (agent.x as isize + dx) as usize;
            let ny = (agent.y as isize + dy) as usize;
            if maze.is_free(nx, ny) {
                AgentState {
                    x: nx,
                    y: ny,
                    ..*agent
                }
            } else {
                *agent
            }
        }
    }
}
