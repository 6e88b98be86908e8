//! Maze data model: text grammar, one-hot encoding and random generation.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle;
use crate::tensor::ChannelTensor;

/// Channel order of [`one_hot`].
pub const EMPTY_CHANNEL: usize = 0;
pub const WALL_CHANNEL: usize = 1;
pub const SOURCE_CHANNEL: usize = 2;
pub const TARGET_CHANNEL: usize = 3;

pub const DEFAULT_RETRY_BUDGET: usize = 10_000;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("empty maze text")]
    Empty,
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid symbol {symbol:?} at row {row}, column {col}")]
    InvalidSymbol {
        symbol: char,
        row: usize,
        col: usize,
    },
    #[error("duplicate source at row {row}, column {col}")]
    DuplicateSource { row: usize, col: usize },
    #[error("duplicate target at row {row}, column {col}")]
    DuplicateTarget { row: usize, col: usize },
    #[error("overlay is {got_h}x{got_w}, maze is {want_h}x{want_w}")]
    DimensionMismatch {
        want_h: usize,
        want_w: usize,
        got_h: usize,
        got_w: usize,
    },
    #[error("wall probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("grid dimensions must be positive")]
    ZeroSize,
    #[error("gave up after {0} attempts to generate a valid maze")]
    RetryBudgetExhausted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Empty,
    Wall,
    Source,
    Target,
}

impl Tile {
    pub fn symbol(self) -> char {
        match self {
            Tile::Empty => '.',
            Tile::Wall => '#',
            Tile::Source => 'S',
            Tile::Target => 'T',
        }
    }

    pub fn from_symbol(c: char) -> Option<Tile> {
        match c {
            '.' => Some(Tile::Empty),
            '#' => Some(Tile::Wall),
            'S' => Some(Tile::Source),
            'T' => Some(Tile::Target),
            _ => None,
        }
    }

    pub fn is_wall(self) -> bool {
        self == Tile::Wall
    }
}

/// Which problem a maze instance poses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    ShortestPath,
    Diameter,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::ShortestPath => "shortest_path",
            Task::Diameter => "diameter",
        })
    }
}

/// Move directions in descending DFS priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Down,
    Right,
    Up,
    Left,
}

impl Direction {
    pub const PRIORITY: [Direction; 4] = [
        Direction::Down,
        Direction::Right,
        Direction::Up,
        Direction::Left,
    ];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Down => (1, 0),
            Direction::Right => (0, 1),
            Direction::Up => (-1, 0),
            Direction::Left => (0, -1),
        }
    }

    /// Stack-direction value recorded for a tile ignored in this direction.
    pub fn stack_value(self) -> f64 {
        match self {
            Direction::Down => 0.2,
            Direction::Right => 0.4,
            Direction::Up => 0.6,
            Direction::Left => 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Maze {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
}

impl Maze {
    /// Builds a maze from row-major tiles, checking the source/target counts.
    pub fn from_tiles(width: usize, height: usize, tiles: Vec<Tile>) -> Result<Maze, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::ZeroSize);
        }
        assert_eq!(
            tiles.len(),
            width * height,
            "tile count must be width*height"
        );
        let mut seen_s = false;
        let mut seen_t = false;
        for (idx, tile) in tiles.iter().enumerate() {
            let (row, col) = (idx / width, idx % width);
            match tile {
                Tile::Source if seen_s => return Err(GridError::DuplicateSource { row, col }),
                Tile::Source => seen_s = true,
                Tile::Target if seen_t => return Err(GridError::DuplicateTarget { row, col }),
                Tile::Target => seen_t = true,
                _ => {}
            }
        }
        Ok(Maze {
            width,
            height,
            tiles,
        })
    }

    /// An all-empty maze.
    pub fn open(width: usize, height: usize) -> Maze {
        Maze::from_tiles(width, height, vec![Tile::Empty; width * height])
            .expect("open maze is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile(&self, idx: usize) -> Tile {
        self.tiles[idx]
    }

    pub fn at(&self, row: usize, col: usize) -> Tile {
        self.tiles[row * self.width + col]
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.width, idx % self.width)
    }

    pub fn source(&self) -> Option<usize> {
        self.tiles.iter().position(|&t| t == Tile::Source)
    }

    pub fn target(&self) -> Option<usize> {
        self.tiles.iter().position(|&t| t == Tile::Target)
    }

    pub fn is_open(&self, idx: usize) -> bool {
        !self.tiles[idx].is_wall()
    }

    /// Neighbor of `idx` one step in `dir`, if inside the grid.
    pub fn step(&self, idx: usize, dir: Direction) -> Option<usize> {
        let (row, col) = self.coords(idx);
        let (dr, dc) = dir.delta();
        let r = row.checked_add_signed(dr)?;
        let c = col.checked_add_signed(dc)?;
        (r < self.height && c < self.width).then(|| self.index(r, c))
    }

    /// Non-wall von Neumann neighbors in DFS priority order.
    pub fn open_neighbors(&self, idx: usize) -> impl Iterator<Item = (Direction, usize)> + '_ {
        Direction::PRIORITY
            .into_iter()
            .filter_map(move |d| self.step(idx, d).map(|n| (d, n)))
            .filter(|&(_, n)| self.is_open(n))
    }

    /// Copy with `idx` overwritten. Does not re-check source/target uniqueness.
    pub fn with_tile(&self, idx: usize, tile: Tile) -> Maze {
        let mut m = self.clone();
        m.tiles[idx] = tile;
        m
    }

    /// Same layout with source and target demoted to empty tiles.
    pub fn without_endpoints(&self) -> Maze {
        let tiles = self
            .tiles
            .iter()
            .map(|&t| if t.is_wall() { Tile::Wall } else { Tile::Empty })
            .collect();
        Maze {
            width: self.width,
            height: self.height,
            tiles,
        }
    }

    /// Same walls, with exactly one source at `at` and no target.
    pub fn with_single_source(&self, at: usize) -> Maze {
        let mut m = self.without_endpoints();
        m.tiles[at] = Tile::Source;
        m
    }
}

impl fmt::Display for Maze {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_maze(self, None).expect("no overlay"))
    }
}

/// Row-major boolean plane over a maze.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl PathMask {
    pub fn empty(width: usize, height: usize) -> PathMask {
        PathMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn for_maze(maze: &Maze) -> PathMask {
        PathMask::empty(maze.width(), maze.height())
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn set(&mut self, idx: usize) {
        self.bits[idx] = true;
    }

    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn is_subset_of(&self, other: &PathMask) -> bool {
        self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// The mask as a 0/1 real plane.
    pub fn to_plane(&self) -> Vec<f64> {
        self.bits
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect()
    }
}

/// Parses rows of `.`, `#`, `S`, `T` separated by `\n`. A trailing newline is accepted.
pub fn parse_maze(text: &str) -> Result<Maze, GridError> {
    let text = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Err(GridError::Empty);
    }
    let mut width = None;
    let mut tiles = Vec::new();
    let mut height = 0;
    for (row, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let mut count = 0;
        for (col, c) in line.chars().enumerate() {
            let tile = Tile::from_symbol(c).ok_or(GridError::InvalidSymbol {
                symbol: c,
                row,
                col,
            })?;
            tiles.push(tile);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(GridError::Ragged {
                    row,
                    expected: w,
                    found: count,
                })
            }
            _ => {}
        }
        height += 1;
    }
    Maze::from_tiles(width.unwrap_or(0), height, tiles)
}

/// Renders a maze in the text grammar. Overlay bits on empty tiles become `o`.
pub fn render_maze(maze: &Maze, overlay: Option<&PathMask>) -> Result<String, GridError> {
    if let Some(mask) = overlay {
        if mask.width != maze.width || mask.height != maze.height {
            return Err(GridError::DimensionMismatch {
                want_h: maze.height,
                want_w: maze.width,
                got_h: mask.height,
                got_w: mask.width,
            });
        }
    }
    let mut out = String::with_capacity((maze.width + 1) * maze.height);
    for row in 0..maze.height {
        if row > 0 {
            out.push('\n');
        }
        for col in 0..maze.width {
            let idx = maze.index(row, col);
            let tile = maze.tiles[idx];
            let marked = overlay.is_some_and(|m| m.bits[idx]);
            out.push(if marked && tile == Tile::Empty {
                'o'
            } else {
                tile.symbol()
            });
        }
    }
    Ok(out)
}

/// 4×H×W encoding with channel order [empty, wall, source, target].
pub fn one_hot(maze: &Maze) -> ChannelTensor {
    let mut t = ChannelTensor::zeros(4, maze.height, maze.width);
    let plane = maze.len();
    for (idx, tile) in maze.tiles.iter().enumerate() {
        let ch = match tile {
            Tile::Empty => EMPTY_CHANNEL,
            Tile::Wall => WALL_CHANNEL,
            Tile::Source => SOURCE_CHANNEL,
            Tile::Target => TARGET_CHANNEL,
        };
        t.data_mut()[ch * plane + idx] = 1.0;
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub width: usize,
    pub height: usize,
    pub wall_probability: f64,
    pub task: Task,
    pub seed: u64,
    pub retry_budget: usize,
}

impl GenConfig {
    pub fn new(width: usize, height: usize, task: Task, seed: u64) -> GenConfig {
        GenConfig {
            width,
            height,
            wall_probability: 0.5,
            task,
            seed,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }

    pub fn square(size: usize, task: Task, seed: u64) -> GenConfig {
        GenConfig::new(size, size, task, seed)
    }

    /// Deterministic generator for this config's seed.
    pub fn rng(&self) -> crate::Rng {
        crate::seeded_rng(self.seed)
    }
}

/// Samples a maze: each tile is a wall independently with `wall_probability`.
///
/// For the shortest-path task a source and target are placed on two distinct
/// empty tiles; if the target is unreachable the whole grid is resampled.
pub fn generate_maze<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Result<Maze, GridError> {
    if cfg.width == 0 || cfg.height == 0 {
        return Err(GridError::ZeroSize);
    }
    if !(0.0..=1.0).contains(&cfg.wall_probability) {
        return Err(GridError::BadProbability(cfg.wall_probability));
    }
    let n = cfg.width * cfg.height;
    for _ in 0..cfg.retry_budget {
        let mut tiles: Vec<Tile> = (0..n)
            .map(|_| {
                if rng.gen_bool(cfg.wall_probability) {
                    Tile::Wall
                } else {
                    Tile::Empty
                }
            })
            .collect();
        if cfg.task == Task::Diameter {
            if tiles.iter().any(|t| !t.is_wall()) {
                return Maze::from_tiles(cfg.width, cfg.height, tiles);
            }
            continue;
        }
        let empty: Vec<usize> = (0..n).filter(|&i| !tiles[i].is_wall()).collect();
        if empty.len() < 2 {
            continue;
        }
        let picks = sample(rng, empty.len(), 2);
        let (s, t) = (empty[picks.index(0)], empty[picks.index(1)]);
        tiles[s] = Tile::Source;
        tiles[t] = Tile::Target;
        let maze = Maze::from_tiles(cfg.width, cfg.height, tiles)?;
        if oracle::bfs_distances(&maze, s)[t].is_some() {
            return Ok(maze);
        }
    }
    Err(GridError::RetryBudgetExhausted(cfg.retry_budget))
}
