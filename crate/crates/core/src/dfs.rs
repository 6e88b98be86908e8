//! Sequential depth-first search automaton with a neural stack.
//!
//! A `route` activation advances one tile per step. Directional channels look
//! two tiles out (5×5 kernel) so a routed tile passes activation only to its
//! highest-priority available neighbor (down, right, up, left). Neighbors the
//! pebble passes without entering are put on the stack with a rank that counts
//! steps on the stack and a direction value in {0.2, 0.4, 0.6, 0.8}. When the
//! pebble is stuck, the tile with the least positive `rank + direction` is
//! popped, which releases its route inhibition.
//!
//! Notes on the weights:
//!
//! * `pebble → stack_rank` uses the neighbor matrix, so a freshly stacked tile
//!   starts at rank 1 and `sawtooth₀(total_rank)` is an exact emptiness test.
//! * `stack_rank` feeds back into itself to count steps on the stack.
//! * Direction values are down 0.2, right 0.4, up 0.6, left 0.8.
//!
//! The pebble is stuck when `sawtooth₀(max pebble)` is 1; a re-stacked tile
//! subtracts its previous rank plus one. The pop indicator is
//! `sawtooth₀(10 · (total_rank − min))`, since direction values sit 0.2 apart.

use crate::error::NcaError;
use crate::grid::{self, Maze};
use crate::tensor::{
    conv2d, relu, sawtooth, spatial_max, step, ChannelTensor, Kernel, KernelStack,
};

pub const ROUTE: usize = 0;
pub const ROUTE_DOWN: usize = 1;
pub const ROUTE_RIGHT: usize = 2;
pub const ROUTE_UP: usize = 3;
pub const ROUTE_LEFT: usize = 4;
pub const STACK: usize = 5;
pub const STACK_RANK: usize = 6;
pub const STACK_DIRECTION: usize = 7;
pub const PEBBLE: usize = 8;
pub const SINCE_BINARY: usize = 9;
pub const SINCE: usize = 10;
pub const HIDDEN_CHANNELS: usize = 11;

pub const CHANNEL_NAMES: [&str; HIDDEN_CHANNELS] = [
    "route",
    "route_down",
    "route_right",
    "route_up",
    "route_left",
    "stack",
    "stack_rank",
    "stack_direction",
    "pebble",
    "since_binary",
    "since",
];

pub mod input {
    pub const EMPTY: usize = 11;
    pub const WALL: usize = 12;
    pub const SOURCE: usize = 13;
    pub const TARGET: usize = 14;
    pub const COUNT: usize = 15;
}

/// Gain applied before the pop indicator's sawtooth.
const POP_GAIN: f64 = 10.0;

/// `(channel, offset of the neighbor the route comes from)` in move priority order.
pub const DIRECTIONAL: [(usize, (usize, usize)); 4] = [
    (ROUTE_DOWN, (1, 2)),
    (ROUTE_RIGHT, (2, 1)),
    (ROUTE_UP, (3, 2)),
    (ROUTE_LEFT, (2, 3)),
];

/// Center identity on the 5×5 grid.
pub fn w2() -> Kernel {
    Kernel::identity(5)
}

/// Neighbor-detection matrix for one directional channel.
pub fn adjacent(offset: (usize, usize)) -> Kernel {
    Kernel::unit(5, offset.0, offset.1)
}

/// Second-neighbor cells whose availability pre-empts a move from `offset`.
pub fn priority(offset: (usize, usize)) -> Kernel {
    match offset {
        (1, 2) => Kernel::zeros(5),
        (2, 1) => Kernel::from_entries(5, &[(3, 1, 1.0)]),
        (3, 2) => Kernel::from_entries(5, &[(4, 2, 1.0), (3, 3, 1.0)]),
        (2, 3) => Kernel::from_entries(5, &[(1, 3, 1.0), (2, 4, 1.0), (3, 3, 1.0)]),
        _ => panic!("no priority matrix for offset {offset:?}"),
    }
}

/// Direction values written onto the pebble's neighbors.
pub fn direction_values() -> Kernel {
    Kernel::from_entries(5, &[(1, 2, 0.2), (2, 1, 0.4), (3, 2, 0.6), (2, 3, 0.8)])
}

/// The pebble's four neighbors.
pub fn neighbors() -> Kernel {
    Kernel::from_entries(5, &[(1, 2, 1.0), (2, 1, 1.0), (3, 2, 1.0), (2, 3, 1.0)])
}

/// The 11×15×5×5 DFS layer.
pub fn build_dfs_weights() -> KernelStack {
    let id = w2();
    let small_id = Kernel::identity(3);
    let mut ks = KernelStack::zeros(HIDDEN_CHANNELS, input::COUNT, 5);

    ks.add(ROUTE, input::SOURCE, &id);
    ks.add(ROUTE, ROUTE, &id);
    ks.add(ROUTE, input::WALL, &id.scaled(-1.0));
    ks.add(ROUTE, STACK, &id.scaled(-1.0));

    for (ch, off) in DIRECTIONAL {
        let p = priority(off);
        ks.add(ch, ROUTE, &adjacent(off));
        ks.add(ch, ROUTE, &p);
        ks.add(ch, input::EMPTY, &p.scaled(-1.0));
        ks.add(ch, input::SOURCE, &p.scaled(-1.0));
        ks.add(ch, input::TARGET, &p.scaled(-1.0));
    }

    ks.add(STACK, PEBBLE, &neighbors());
    ks.add(STACK, STACK, &id);
    ks.add(STACK, input::WALL, &id.scaled(-2.0));
    ks.add(STACK, ROUTE, &id.scaled(-2.0));

    ks.add(STACK_DIRECTION, PEBBLE, &direction_values());
    ks.add(STACK_DIRECTION, STACK_DIRECTION, &id);
    ks.add(STACK_DIRECTION, input::WALL, &id.scaled(-2.0));
    ks.add(STACK_DIRECTION, ROUTE, &id.scaled(-2.0));

    ks.add(STACK_RANK, PEBBLE, &neighbors());
    ks.add(STACK_RANK, STACK_RANK, &id);
    ks.add(STACK_RANK, input::WALL, &id.scaled(-2.0));
    ks.add(STACK_RANK, ROUTE, &id.scaled(-2.0));
    ks.add(STACK_RANK, STACK, &id);

    ks.add(SINCE_BINARY, PEBBLE, &id);
    ks.add(SINCE_BINARY, SINCE_BINARY, &small_id);
    ks.add(SINCE, SINCE_BINARY, &small_id);
    ks.add(SINCE, SINCE, &small_id);
    ks
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsConfig {
    /// Stand-in for "no stack entry" when taking the minimum total rank.
    pub rank_sentinel: f64,
    pub max_steps: usize,
}

impl DfsConfig {
    /// `L = 4·H·W + 8`, comfortably above any reachable rank plus direction.
    pub fn for_maze(maze: &Maze) -> DfsConfig {
        let n = maze.width() * maze.height();
        DfsConfig {
            rank_sentinel: (4 * n + 8) as f64,
            max_steps: 8 * n + 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfsState {
    pub hidden: ChannelTensor,
    pub step: usize,
    pub maze_onehot: ChannelTensor,
}

impl DfsState {
    /// Fresh state searching from `start`, which becomes the only source tile.
    pub fn new(maze: &Maze, start: usize) -> DfsState {
        DfsState {
            hidden: ChannelTensor::zeros(HIDDEN_CHANNELS, maze.height(), maze.width()),
            step: 0,
            maze_onehot: grid::one_hot(&maze.with_single_source(start)),
        }
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        self.hidden.plane(channel)
    }

    /// The single pebble tile, if any.
    pub fn pebble(&self) -> Option<usize> {
        self.plane(PEBBLE).iter().position(|&v| v > 0.5)
    }
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfsStepInfo {
    pub pebble: Option<usize>,
    pub is_stuck: bool,
    pub min_total_rank: f64,
    pub popped: Option<usize>,
}

impl DfsStepInfo {
    /// Stuck with nothing left on the stack: the search is over.
    pub fn finished(&self, cfg: &DfsConfig) -> bool {
        self.is_stuck && self.min_total_rank >= cfg.rank_sentinel
    }
}

#[derive(Debug, Clone)]
pub struct DfsNca {
    weights: KernelStack,
}

impl Default for DfsNca {
    fn default() -> Self {
        DfsNca {
            weights: build_dfs_weights(),
        }
    }
}

impl DfsNca {
    pub fn weights(&self) -> &KernelStack {
        &self.weights
    }

    pub fn step(&self, state: &DfsState, cfg: &DfsConfig) -> (DfsState, DfsStepInfo) {
        let mut next = state.clone();
        let info = self.advance(&mut next, cfg);
        (next, info)
    }

    pub fn advance(&self, state: &mut DfsState, cfg: &DfsConfig) -> DfsStepInfo {
        let prev = &state.hidden;
        let x = prev
            .concat(&state.maze_onehot)
            .expect("hidden and maze share a shape");
        let mut out = conv2d(&x, &self.weights).expect("DFS layer takes 15 channels");
        let n = out.plane_len();

        for i in 0..n {
            let mut incoming = 0.0;
            for (ch, _) in DIRECTIONAL {
                let v = step(out.plane(ch)[i]);
                out.plane_mut(ch)[i] = v;
                incoming += v;
            }
            let route = step(out.plane(ROUTE)[i] + step(incoming));
            out.plane_mut(ROUTE)[i] = route;

            for ch in [STACK, STACK_RANK, STACK_DIRECTION] {
                let v = relu(out.plane(ch)[i]);
                out.plane_mut(ch)[i] = v;
            }
            let dbl = sawtooth(2, out.plane(STACK)[i]);
            if dbl != 0.0 {
                out.plane_mut(STACK)[i] -= prev.plane(STACK)[i] * dbl;
                out.plane_mut(STACK_DIRECTION)[i] -= prev.plane(STACK_DIRECTION)[i] * dbl;
                out.plane_mut(STACK_RANK)[i] -= (prev.plane(STACK_RANK)[i] + 1.0) * dbl;
            }
            out.plane_mut(PEBBLE)[i] = route - prev.plane(ROUTE)[i];
        }

        let is_stuck = sawtooth(0, spatial_max(out.plane(PEBBLE)));
        let total: Vec<f64> = (0..n)
            .map(|i| {
                let t = out.plane(STACK_RANK)[i] + out.plane(STACK_DIRECTION)[i];
                t + sawtooth(0, t) * cfg.rank_sentinel
            })
            .collect();
        let min_total_rank = total.iter().copied().fold(f64::INFINITY, f64::min);
        let mut popped = None;
        for (i, &t) in total.iter().enumerate() {
            let is_popped = sawtooth(0, POP_GAIN * (t - min_total_rank)) * is_stuck;
            if is_popped == 0.0 {
                continue;
            }
            for ch in [STACK, STACK_RANK, STACK_DIRECTION] {
                let v = out.plane(ch)[i];
                out.plane_mut(ch)[i] = v - v * is_popped;
            }
            if min_total_rank < cfg.rank_sentinel {
                popped = Some(i);
            }
        }

        state.hidden = out;
        state.step += 1;
        DfsStepInfo {
            pebble: state.pebble(),
            is_stuck: is_stuck == 1.0,
            min_total_rank,
            popped,
        }
    }
}

pub fn dfs_step(state: &DfsState, cfg: &DfsConfig) -> (DfsState, DfsStepInfo) {
    DfsNca::default().step(state, cfg)
}

/// Observable record of a DFS run.
#[derive(Debug, Clone, PartialEq)]
pub struct DfsTrace {
    /// Pebble positions in the order they appeared.
    pub visit_order: Vec<usize>,
    /// Step at which each pebble in `visit_order` appeared.
    pub visit_steps: Vec<usize>,
    /// `(step, tile)` for every pop.
    pub pop_events: Vec<(usize, usize)>,
    pub steps_used: usize,
    /// Final `since` plane.
    pub since: Vec<f64>,
}

pub fn run_dfs(maze: &Maze, start: usize, cfg: &DfsConfig) -> Result<DfsTrace, NcaError> {
    run_dfs_observed(maze, start, cfg, |_, _| {})
}

/// Runs until the pebble is stuck with an empty stack.
pub fn run_dfs_observed(
    maze: &Maze,
    start: usize,
    cfg: &DfsConfig,
    mut observe: impl FnMut(&DfsState, &DfsStepInfo),
) -> Result<DfsTrace, NcaError> {
    if start >= maze.len() || !maze.is_open(start) {
        return Err(NcaError::StartOnWall(start));
    }
    if cfg.max_steps == 0 {
        return Err(NcaError::ZeroMaxSteps);
    }
    let nca = DfsNca::default();
    let mut state = DfsState::new(maze, start);
    let mut trace = DfsTrace {
        visit_order: Vec::new(),
        visit_steps: Vec::new(),
        pop_events: Vec::new(),
        steps_used: 0,
        since: Vec::new(),
    };
    for _ in 0..cfg.max_steps {
        let info = nca.advance(&mut state, cfg);
        observe(&state, &info);
        if let Some(p) = info.pebble {
            trace.visit_order.push(p);
            trace.visit_steps.push(state.step);
        }
        if let Some(p) = info.popped {
            trace.pop_events.push((state.step, p));
        }
        if info.finished(cfg) {
            trace.steps_used = state.step;
            trace.since = state.plane(SINCE).to_vec();
            return Ok(trace);
        }
    }
    Err(NcaError::MaxStepsExhausted(cfg.max_steps))
}
