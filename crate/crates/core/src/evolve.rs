//! Adversarial dataset evolution.
//!
//! Each generation mutates a random batch of mazes, labels the offspring with
//! the oracle, and lets the offspring that a solver handles worst displace the
//! dataset members it handles best.

use rand::seq::index;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bfs::{self, BfsMode};
use crate::dfs::DfsConfig;
use crate::diameter;
use crate::extract;
use crate::grid::{Maze, PathMask, Task, Tile};
use crate::oracle;
use crate::par;

pub const DEFAULT_TAU: f64 = 1e-3;
pub const DEFAULT_BATCH: usize = 64;
pub const DEFAULT_STEP_BUDGET: usize = 16;
pub const MUTATION_TRIES: usize = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvolveError {
    #[error("n_flips must be at least 1")]
    ZeroFlips,
    #[error("no valid offspring after {0} tries")]
    GaveUp(usize),
    #[error("batch size {batch} exceeds dataset size {dataset}")]
    BatchTooLarge { batch: usize, dataset: usize },
    #[error("solver {name} failed: {message}")]
    Solver { name: String, message: String },
}

/// Anything that maps a maze to a per-tile prediction.
pub trait Solver: Sync {
    fn name(&self) -> &str;
    fn solve(&self, maze: &Maze, task: Task) -> anyhow::Result<Vec<f64>>;
}

/// Ground-truth label for a maze, or `None` if the maze has no solution.
pub fn label(maze: &Maze, task: Task) -> Option<PathMask> {
    match task {
        Task::ShortestPath => oracle::shortest_path_union(maze).ok().map(|(_, m)| m),
        Task::Diameter => oracle::diameter_witness(maze).ok().map(|(_, _, m)| m),
    }
}

/// Perfect solver: returns the oracle label.
pub struct OracleSolver;

impl Solver for OracleSolver {
    fn name(&self) -> &str {
        "oracle"
    }

    fn solve(&self, maze: &Maze, task: Task) -> anyhow::Result<Vec<f64>> {
        Ok(label(maze, task).map_or_else(|| vec![0.0; maze.len()], |m| m.to_plane()))
    }
}

/// Predicts no path anywhere.
pub struct ZerosSolver;

impl Solver for ZerosSolver {
    fn name(&self) -> &str {
        "zeros"
    }

    fn solve(&self, maze: &Maze, _task: Task) -> anyhow::Result<Vec<f64>> {
        Ok(vec![0.0; maze.len()])
    }
}

/// The hand-coded automata with a hard cap on total steps.
///
/// For shortest paths, flood and extraction share `budget` steps and whatever
/// path has been marked when the budget runs out is the answer. For the
/// diameter, the DFS gets `budget` steps per component.
pub struct BudgetedNca {
    pub budget: usize,
}

impl Default for BudgetedNca {
    fn default() -> Self {
        BudgetedNca {
            budget: DEFAULT_STEP_BUDGET,
        }
    }
}

impl Solver for BudgetedNca {
    fn name(&self) -> &str {
        "budgeted-nca"
    }

    fn solve(&self, maze: &Maze, task: Task) -> anyhow::Result<Vec<f64>> {
        let zeros = vec![0.0; maze.len()];
        if self.budget == 0 {
            return Ok(zeros);
        }
        match task {
            Task::ShortestPath => {
                let flood = bfs::run_bfs(maze, BfsMode::Bidirectional, self.budget)?;
                match flood.meet_step {
                    Some(k) => Ok(extract::partial_extract(&flood, self.budget - k).to_plane()),
                    None => Ok(zeros),
                }
            }
            Task::Diameter => {
                let cfg = DfsConfig {
                    max_steps: self.budget,
                    ..DfsConfig::for_maze(maze)
                };
                Ok(diameter::diameter_nca(maze, &cfg).map_or(zeros, |r| r.witness.to_plane()))
            }
        }
    }
}

/// A labeled maze.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub task: Task,
    pub maze: Maze,
    pub solution: PathMask,
    pub seed: u64,
}

impl Sample {
    pub fn labeled(id: String, task: Task, maze: Maze, seed: u64) -> Option<Sample> {
        let solution = label(&maze, task)?;
        Some(Sample {
            id,
            task,
            maze,
            solution,
            seed,
        })
    }
}

/// MSE the solver induces on one sample.
pub fn loss(solver: &dyn Solver, sample: &Sample) -> Result<f64, EvolveError> {
    let fail = |message: String| EvolveError::Solver {
        name: solver.name().to_string(),
        message,
    };
    let pred = solver
        .solve(&sample.maze, sample.task)
        .map_err(|e| fail(e.to_string()))?;
    oracle::mse(&pred, &sample.solution).map_err(|e| fail(e.to_string()))
}

fn losses(solver: &dyn Solver, samples: &[Sample]) -> Result<Vec<f64>, EvolveError> {
    par::map_slice(samples, |s| loss(solver, s))
        .into_iter()
        .collect()
}

/// Flips `n_flips` distinct non-endpoint tiles between empty and wall.
///
/// Draws are repeated until the task stays solvable: the target must remain
/// reachable, or for the diameter at least one tile must stay open.
pub fn mutate_maze<R: Rng + ?Sized>(
    maze: &Maze,
    rng: &mut R,
    n_flips: usize,
    task: Task,
) -> Result<Maze, EvolveError> {
    if n_flips == 0 {
        return Err(EvolveError::ZeroFlips);
    }
    let candidates: Vec<usize> = (0..maze.len())
        .filter(|&i| matches!(maze.tile(i), Tile::Empty | Tile::Wall))
        .collect();
    let n = n_flips.min(candidates.len());
    for _ in 0..MUTATION_TRIES {
        let mut child = maze.clone();
        for k in index::sample(rng, candidates.len(), n) {
            let i = candidates[k];
            let flipped = if child.tile(i) == Tile::Wall {
                Tile::Empty
            } else {
                Tile::Wall
            };
            child = child.with_tile(i, flipped);
        }
        let ok = match task {
            Task::ShortestPath => oracle::shortest_path_union(&child).is_ok(),
            Task::Diameter => (0..child.len()).any(|i| child.is_open(i)),
        };
        if ok {
            return Ok(child);
        }
    }
    Err(EvolveError::GaveUp(MUTATION_TRIES))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    /// Mutation only happens while the mean loss is below this.
    pub loss_threshold: f64,
    pub batch_size: usize,
    pub n_flips: usize,
    pub generations: usize,
    pub task: Task,
    pub seed: u64,
}

impl EvolutionConfig {
    /// Defaults for mazes of the given size.
    pub fn for_size(width: usize, height: usize, task: Task, seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            loss_threshold: DEFAULT_TAU,
            batch_size: DEFAULT_BATCH,
            n_flips: default_flips(width, height),
            generations: 1,
            task,
            seed,
        }
    }
}

/// `⌈0.05 · H · W⌉`, at least 1.
pub fn default_flips(width: usize, height: usize) -> usize {
    (width * height).div_ceil(20).max(1)
}

/// One generation's summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_loss: f64,
    /// Mean number of marked solution tiles.
    pub mean_length: f64,
    /// Mean length of one shortest path (or diameter) in tiles.
    pub mean_path_tiles: f64,
    pub replacements: usize,
    /// Mean loss was at or above the threshold, so nothing was mutated.
    pub gated: bool,
}

pub type EvolutionStats = Vec<GenerationStats>;

/// Mean solution length in tiles.
pub fn mean_length(dataset: &[Sample]) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    dataset.iter().map(|s| s.solution.count()).sum::<usize>() as f64 / dataset.len() as f64
}

/// Tiles on one shortest source–target path (moves + 1), or the diameter in tiles.
pub fn path_tiles(sample: &Sample) -> usize {
    match sample.task {
        Task::ShortestPath => oracle::shortest_path_union(&sample.maze).map_or(0, |(d, _)| d + 1),
        Task::Diameter => sample.solution.count(),
    }
}

/// Mean of [`path_tiles`] over the dataset.
pub fn mean_path_tiles(dataset: &[Sample]) -> f64 {
    let lens = par::map_slice(dataset, path_tiles);
    mean(&lens.iter().map(|&l| l as f64).collect::<Vec<_>>())
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Dataset paired with the solver's loss on each member.
pub struct Population {
    pub samples: Vec<Sample>,
    pub fitness: Vec<f64>,
}

impl Population {
    pub fn new(samples: Vec<Sample>, solver: &dyn Solver) -> Result<Population, EvolveError> {
        let fitness = losses(solver, &samples)?;
        Ok(Population { samples, fitness })
    }

    pub fn mean_loss(&self) -> f64 {
        mean(&self.fitness)
    }
}

/// One generation: mutate a batch, then replace least-fit members with
/// strictly fitter offspring.
pub fn evolve_step<R: Rng + ?Sized>(
    pop: &mut Population,
    solver: &dyn Solver,
    cfg: &EvolutionConfig,
    generation: usize,
    rng: &mut R,
) -> Result<GenerationStats, EvolveError> {
    let n = pop.samples.len();
    if cfg.batch_size > n {
        return Err(EvolveError::BatchTooLarge {
            batch: cfg.batch_size,
            dataset: n,
        });
    }
    let mut stats = GenerationStats {
        generation,
        mean_loss: pop.mean_loss(),
        mean_length: mean_length(&pop.samples),
        mean_path_tiles: mean_path_tiles(&pop.samples),
        replacements: 0,
        gated: false,
    };
    if stats.mean_loss.partial_cmp(&cfg.loss_threshold) != Some(std::cmp::Ordering::Less) {
        stats.gated = true;
        return Ok(stats);
    }

    let mut offspring = Vec::with_capacity(cfg.batch_size);
    for (k, p) in index::sample(rng, n, cfg.batch_size)
        .into_iter()
        .enumerate()
    {
        let parent = &pop.samples[p];
        let child = match mutate_maze(&parent.maze, rng, cfg.n_flips, parent.task) {
            Ok(m) => m,
            Err(EvolveError::GaveUp(_)) => continue,
            Err(e) => return Err(e),
        };
        let id = format!("{}.g{generation}.{k}", parent.id);
        if let Some(s) = Sample::labeled(id, parent.task, child, parent.seed) {
            offspring.push(s);
        }
    }
    let off_fit = losses(solver, &offspring)?;

    let mut off_order: Vec<usize> = (0..offspring.len()).collect();
    off_order.sort_by(|&a, &b| off_fit[b].total_cmp(&off_fit[a]).then(a.cmp(&b)));
    let mut weakest: Vec<usize> = (0..n).collect();
    weakest.sort_by(|&a, &b| pop.fitness[a].total_cmp(&pop.fitness[b]).then(a.cmp(&b)));

    let mut slots = off_order.into_iter().map(Some).collect::<Vec<_>>();
    for (slot, &member) in slots.iter_mut().zip(&weakest) {
        let o = slot.take().expect("each offspring used once");
        if off_fit[o] <= pop.fitness[member] {
            break;
        }
        pop.samples[member] = offspring[o].clone();
        pop.fitness[member] = off_fit[o];
        stats.replacements += 1;
    }
    stats.mean_loss = pop.mean_loss();
    stats.mean_length = mean_length(&pop.samples);
    stats.mean_path_tiles = mean_path_tiles(&pop.samples);
    Ok(stats)
}

/// Runs `cfg.generations` generations from `cfg.seed`.
pub fn run_evolution(
    dataset: Vec<Sample>,
    solver: &dyn Solver,
    cfg: &EvolutionConfig,
) -> Result<(Vec<Sample>, EvolutionStats), EvolveError> {
    let mut rng = crate::seeded_rng(cfg.seed);
    let mut pop = Population::new(dataset, solver)?;
    let mut stats = Vec::with_capacity(cfg.generations);
    for g in 1..=cfg.generations {
        stats.push(evolve_step(&mut pop, solver, cfg, g, &mut rng)?);
    }
    Ok((pop.samples, stats))
}
