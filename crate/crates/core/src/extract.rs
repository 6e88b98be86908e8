//! Path-extraction automaton.
//!
//! Runs on top of a terminated flood. Hidden channels are
//! `[path, path_up, path_left, path_right, path_down]`; each step concatenates
//! the frozen `[flood_s, flood_t, age]` planes. A directional channel fires
//! when its neighbor carries path and is exactly one age step younger, which
//! walks the path from the flood overlap back to both endpoints.
//!
//! The path channel combines the overlap seed with directional acceptance:
//! `path = step(step(flood_s + flood_t - 1) + Σ path_dir)`.

use crate::bfs::{self, BfsResult};
use crate::error::NcaError;
use crate::grid::{PathMask, SOURCE_CHANNEL, TARGET_CHANNEL};
use crate::tensor::{
    activate_plane, conv2d, sawtooth, step, ActivationKind, ChannelTensor, Kernel, KernelStack,
};

pub const PATH: usize = 0;
pub const PATH_UP: usize = 1;
pub const PATH_LEFT: usize = 2;
pub const PATH_RIGHT: usize = 3;
pub const PATH_DOWN: usize = 4;
pub const HIDDEN_CHANNELS: usize = 5;

/// `(channel, kernel offset)` for each directional channel.
pub const DIRECTIONAL: [(usize, (usize, usize)); 4] = [
    (PATH_UP, (0, 1)),
    (PATH_LEFT, (1, 0)),
    (PATH_RIGHT, (1, 2)),
    (PATH_DOWN, (2, 1)),
];

pub mod input {
    pub const PATH: usize = 0;
    pub const FLOOD_S: usize = 5;
    pub const FLOOD_T: usize = 6;
    pub const AGE: usize = 7;
    pub const COUNT: usize = 8;
}

/// The 5×8×3×3 extraction layer, with bias −1 on the path channel.
pub fn build_extract_weights() -> KernelStack {
    let id = Kernel::identity(3);
    let mut ks = KernelStack::zeros(HIDDEN_CHANNELS, input::COUNT, 3);
    ks.add(PATH, input::FLOOD_S, &id);
    ks.add(PATH, input::FLOOD_T, &id);
    ks.set_bias(PATH, -1.0);
    for (ch, (r, c)) in DIRECTIONAL {
        let adj = Kernel::unit(3, r, c);
        ks.add(ch, input::AGE, &adj.minus(&id).scaled(2.0));
        ks.add(ch, input::PATH, &adj);
    }
    ks
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractState {
    pub hidden: ChannelTensor,
    pub step: usize,
    /// Terminated flood state; never modified.
    pub bfs_frozen: ChannelTensor,
}

impl ExtractState {
    pub fn new(bfs: &BfsResult) -> ExtractState {
        let frozen = &bfs.final_state.hidden;
        ExtractState {
            hidden: ChannelTensor::zeros(HIDDEN_CHANNELS, frozen.height(), frozen.width()),
            step: 0,
            bfs_frozen: frozen.clone(),
        }
    }

    pub fn path(&self) -> &[f64] {
        self.hidden.plane(PATH)
    }

    pub fn mask(&self) -> PathMask {
        PathMask {
            width: self.hidden.width(),
            height: self.hidden.height(),
            bits: self.path().iter().map(|&v| v > 0.5).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractNca {
    weights: KernelStack,
}

impl Default for ExtractNca {
    fn default() -> Self {
        ExtractNca {
            weights: build_extract_weights(),
        }
    }
}

impl ExtractNca {
    pub fn weights(&self) -> &KernelStack {
        &self.weights
    }

    pub fn step(&self, state: &ExtractState) -> ExtractState {
        let mut next = state.clone();
        self.advance(&mut next);
        next
    }

    pub fn advance(&self, state: &mut ExtractState) {
        let x = state
            .hidden
            .concat(&state.bfs_frozen)
            .expect("hidden and frozen flood share a shape");
        let mut out = conv2d(&x, &self.weights).expect("extraction layer takes 8 channels");
        for (ch, _) in DIRECTIONAL {
            activate_plane(out.plane_mut(ch), ActivationKind::Sawtooth(-1));
        }
        let n = out.plane_len();
        for i in 0..n {
            let seed = step(out.plane(PATH)[i]);
            let accepted: f64 = DIRECTIONAL.iter().map(|&(ch, _)| out.plane(ch)[i]).sum();
            out.plane_mut(PATH)[i] = step(seed + accepted);
        }
        state.hidden = out;
        state.step += 1;
    }
}

pub fn extract_step(state: &ExtractState) -> ExtractState {
    ExtractNca::default().step(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractResult {
    pub mask: PathMask,
    /// Last step at which the path channel changed.
    pub steps_used: usize,
}

pub fn run_extract(bfs: &BfsResult, max_steps: usize) -> Result<ExtractResult, NcaError> {
    run_extract_observed(bfs, max_steps, |_| {})
}

/// Iterates extraction until the path channel stops changing.
pub fn run_extract_observed(
    bfs: &BfsResult,
    max_steps: usize,
    mut observe: impl FnMut(&ExtractState),
) -> Result<ExtractResult, NcaError> {
    if !bfs.met {
        return Err(NcaError::FloodsNotMet);
    }
    if max_steps == 0 {
        return Err(NcaError::ZeroMaxSteps);
    }
    let nca = ExtractNca::default();
    let mut state = ExtractState::new(bfs);
    let mut steps_used = 0;
    for _ in 0..max_steps {
        let before = state.path().to_vec();
        nca.advance(&mut state);
        observe(&state);
        if state.path() != before.as_slice() {
            steps_used = state.step;
            continue;
        }
        let onehot = &bfs.final_state.maze_onehot;
        let covered = |ch: usize| {
            onehot
                .plane(ch)
                .iter()
                .zip(state.path())
                .all(|(&m, &p)| m == 0.0 || p == 1.0)
        };
        if !(covered(SOURCE_CHANNEL) && covered(TARGET_CHANNEL)) {
            return Err(NcaError::ExtractionIncomplete);
        }
        return Ok(ExtractResult {
            mask: state.mask(),
            steps_used,
        });
    }
    Err(NcaError::MaxStepsExhausted(max_steps))
}

/// Path mask after at most `budget` extraction steps, complete or not.
pub fn partial_extract(bfs: &BfsResult, budget: usize) -> PathMask {
    let nca = ExtractNca::default();
    let mut state = ExtractState::new(bfs);
    for _ in 0..budget {
        nca.advance(&mut state);
    }
    state.mask()
}

/// Flood followed by extraction on a shortest-path maze.
pub fn solve(maze: &crate::grid::Maze) -> Result<ExtractResult, NcaError> {
    let max = bfs::default_max_steps(maze);
    let flood = bfs::run_bfs(maze, bfs::BfsMode::Bidirectional, max)?;
    run_extract(&flood, max)
}

/// Whether a directional pre-activation means "accept the neighbor's path".
pub fn accepts(pre_activation: f64) -> bool {
    sawtooth(-1, pre_activation) == 1.0
}
