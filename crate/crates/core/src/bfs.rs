//! Bidirectional flood ("Dijkstra map") automaton.
//!
//! Hidden channels are `[flood_s, flood_t, age]`; each step concatenates the
//! maze one-hot, convolves with [`build_bfs_weights`], and thresholds the two
//! flood channels. Age is left as the raw integer sum, so a tile first flooded
//! at step `k` by one flood holds age `t - k` at step `t`.

use crate::error::NcaError;
use crate::grid::{self, Maze, PathMask};
use crate::tensor::{activate_plane, conv2d, ActivationKind, ChannelTensor, Kernel, KernelStack};

pub const FLOOD_S: usize = 0;
pub const FLOOD_T: usize = 1;
pub const AGE: usize = 2;
pub const HIDDEN_CHANNELS: usize = 3;

/// Input channel indices after concatenating the maze one-hot.
pub mod input {
    pub const FLOOD_S: usize = 0;
    pub const FLOOD_T: usize = 1;
    pub const AGE: usize = 2;
    pub const EMPTY: usize = 3;
    pub const WALL: usize = 4;
    pub const SOURCE: usize = 5;
    pub const TARGET: usize = 6;
    pub const COUNT: usize = 7;
}

/// Von Neumann neighborhood plus center.
pub fn von_neumann() -> Kernel {
    Kernel::from_entries(
        3,
        &[
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
        ],
    )
}

/// The 3×7×3×3 flood layer. Bias is zero.
pub fn build_bfs_weights() -> KernelStack {
    let id = Kernel::identity(3);
    let spread = von_neumann();
    let mut ks = KernelStack::zeros(HIDDEN_CHANNELS, input::COUNT, 3);
    ks.add(FLOOD_S, input::SOURCE, &id);
    ks.add(FLOOD_S, input::FLOOD_S, &spread);
    ks.add(FLOOD_S, input::WALL, &id.scaled(-6.0));
    ks.add(FLOOD_T, input::TARGET, &id);
    ks.add(FLOOD_T, input::FLOOD_T, &spread);
    ks.add(FLOOD_T, input::WALL, &id.scaled(-6.0));
    ks.add(AGE, input::FLOOD_S, &id);
    ks.add(AGE, input::FLOOD_T, &id);
    ks.add(AGE, input::AGE, &id);
    ks
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfsState {
    pub hidden: ChannelTensor,
    pub step: usize,
    pub maze_onehot: ChannelTensor,
}

impl BfsState {
    pub fn new(maze: &Maze) -> BfsState {
        BfsState {
            hidden: ChannelTensor::zeros(HIDDEN_CHANNELS, maze.height(), maze.width()),
            step: 0,
            maze_onehot: grid::one_hot(maze),
        }
    }

    pub fn flood_s(&self) -> &[f64] {
        self.hidden.plane(FLOOD_S)
    }

    pub fn flood_t(&self) -> &[f64] {
        self.hidden.plane(FLOOD_T)
    }

    pub fn age(&self) -> &[f64] {
        self.hidden.plane(AGE)
    }

    /// Tiles where a flood channel is set.
    pub fn flooded(&self, channel: usize) -> PathMask {
        PathMask {
            width: self.hidden.width(),
            height: self.hidden.height(),
            bits: self
                .hidden
                .plane(channel)
                .iter()
                .map(|&v| v > 0.5)
                .collect(),
        }
    }

    /// Tiles carrying both floods.
    pub fn overlap(&self) -> Vec<usize> {
        self.flood_s()
            .iter()
            .zip(self.flood_t())
            .enumerate()
            .filter_map(|(i, (&s, &t))| (s + t == 2.0).then_some(i))
            .collect()
    }
}

/// The flood automaton with its weights built once.
#[derive(Debug, Clone)]
pub struct BfsNca {
    weights: KernelStack,
}

impl Default for BfsNca {
    fn default() -> Self {
        BfsNca {
            weights: build_bfs_weights(),
        }
    }
}

impl BfsNca {
    pub fn weights(&self) -> &KernelStack {
        &self.weights
    }

    pub fn step(&self, state: &BfsState) -> BfsState {
        let mut next = state.clone();
        self.advance(&mut next);
        next
    }

    pub fn advance(&self, state: &mut BfsState) {
        let x = state
            .hidden
            .concat(&state.maze_onehot)
            .expect("hidden and maze share a shape");
        let mut out = conv2d(&x, &self.weights).expect("BFS layer takes 7 channels");
        activate_plane(out.plane_mut(FLOOD_S), ActivationKind::Step);
        activate_plane(out.plane_mut(FLOOD_T), ActivationKind::Step);
        state.hidden = out;
        state.step += 1;
    }
}

/// One forward pass with freshly built weights.
pub fn bfs_step(state: &BfsState) -> BfsState {
    BfsNca::default().step(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BfsMode {
    /// Flood from the maze's source and target until the floods overlap.
    Bidirectional,
    /// Flood from a virtual source at this tile until the flood stops growing.
    SingleSource(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfsResult {
    /// Floods overlapped (bidirectional mode only).
    pub met: bool,
    pub meet_step: Option<usize>,
    /// The flood stopped changing (single-source mode only).
    pub fixpoint: bool,
    pub final_state: BfsState,
}

pub fn default_max_steps(maze: &Maze) -> usize {
    4 * maze.width() * maze.height()
}

pub fn run_bfs(maze: &Maze, mode: BfsMode, max_steps: usize) -> Result<BfsResult, NcaError> {
    run_bfs_observed(maze, mode, max_steps, |_| {})
}

/// Like [`run_bfs`], calling `observe` with the state after every step.
pub fn run_bfs_observed(
    maze: &Maze,
    mode: BfsMode,
    max_steps: usize,
    mut observe: impl FnMut(&BfsState),
) -> Result<BfsResult, NcaError> {
    if max_steps == 0 {
        return Err(NcaError::ZeroMaxSteps);
    }
    let nca = BfsNca::default();
    match mode {
        BfsMode::Bidirectional => {
            maze.source().ok_or(NcaError::MissingSource)?;
            maze.target().ok_or(NcaError::MissingTarget)?;
            let mut state = BfsState::new(maze);
            for _ in 0..max_steps {
                nca.advance(&mut state);
                observe(&state);
                if !state.overlap().is_empty() {
                    return Ok(BfsResult {
                        met: true,
                        meet_step: Some(state.step),
                        fixpoint: false,
                        final_state: state,
                    });
                }
            }
            Ok(BfsResult {
                met: false,
                meet_step: None,
                fixpoint: false,
                final_state: state,
            })
        }
        BfsMode::SingleSource(at) => {
            if at >= maze.len() || !maze.is_open(at) {
                return Err(NcaError::StartOnWall(at));
            }
            let mut state = BfsState::new(&maze.with_single_source(at));
            for _ in 0..max_steps {
                let before = state.flood_s().to_vec();
                nca.advance(&mut state);
                observe(&state);
                if state.step > 1 && state.flood_s() == before.as_slice() {
                    return Ok(BfsResult {
                        met: false,
                        meet_step: None,
                        fixpoint: true,
                        final_state: state,
                    });
                }
            }
            Ok(BfsResult {
                met: false,
                meet_step: None,
                fixpoint: false,
                final_state: state,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::parse_maze;

    #[test]
    fn table_entries() {
        let ks = build_bfs_weights();
        assert_eq!(ks.weight(FLOOD_S, input::WALL, 1, 1), -6.0);
        assert_eq!(ks.weight(FLOOD_T, input::WALL, 1, 1), -6.0);
        let spread = ks.slice(FLOOD_S, input::FLOOD_S);
        let ones: Vec<(usize, usize)> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .filter(|&(r, c)| spread.get(r, c) == 1.0)
            .collect();
        assert_eq!(ones, vec![(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)]);
        for o in 0..HIDDEN_CHANNELS {
            for i in 0..input::COUNT {
                for (r, c) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
                    assert_eq!(ks.weight(o, i, r, c), 0.0);
                }
            }
        }
        assert!(ks.bias().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn first_step_marks_endpoints_only() {
        let m = parse_maze("S.T").unwrap();
        let s1 = bfs_step(&BfsState::new(&m));
        assert_eq!(s1.flood_s(), &[1.0, 0.0, 0.0]);
        assert_eq!(s1.flood_t(), &[0.0, 0.0, 1.0]);
        assert_eq!(s1.age(), &[0.0, 0.0, 0.0]);
        assert_eq!(s1.step, 1);
    }

    #[test]
    fn wall_between_two_floods_stays_dry() {
        // Center wall has two flooded neighbors: pre-activation 2 - 6 = -4.
        let m = parse_maze("S#T").unwrap();
        let nca = BfsNca::default();
        let mut s = BfsState::new(&m);
        for _ in 0..5 {
            nca.advance(&mut s);
            assert_eq!(s.flood_s()[1], 0.0);
            assert_eq!(s.flood_t()[1], 0.0);
        }
    }

    #[test]
    fn corridor_meets_in_the_middle() {
        let m = parse_maze("S...T").unwrap();
        let r = run_bfs(&m, BfsMode::Bidirectional, default_max_steps(&m)).unwrap();
        assert!(r.met);
        assert_eq!(r.meet_step, Some(3));
        assert_eq!(r.final_state.overlap(), vec![2]);
    }

    #[test]
    fn separated_floods_never_meet() {
        let m = parse_maze("S.#.T\n..#..").unwrap();
        let r = run_bfs(&m, BfsMode::Bidirectional, default_max_steps(&m)).unwrap();
        assert!(!r.met);
        assert_eq!(r.meet_step, None);
    }

    #[test]
    fn single_source_fixpoint_on_corridor() {
        let m = parse_maze("...").unwrap();
        let r = run_bfs(&m, BfsMode::SingleSource(0), 100).unwrap();
        assert!(r.fixpoint);
        assert_eq!(r.final_state.flood_s(), &[1.0, 1.0, 1.0]);
        // Flooded at step 1, never changes after step 3, fixpoint seen at step 4.
        assert_eq!(r.final_state.step, 4);
        assert_eq!(r.final_state.age(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn argument_errors() {
        let m = parse_maze(".#.").unwrap();
        assert_eq!(
            run_bfs(&m, BfsMode::Bidirectional, 10).unwrap_err(),
            NcaError::MissingSource
        );
        assert_eq!(
            run_bfs(&m, BfsMode::SingleSource(1), 10).unwrap_err(),
            NcaError::StartOnWall(1)
        );
        assert_eq!(
            run_bfs(&m, BfsMode::SingleSource(0), 0).unwrap_err(),
            NcaError::ZeroMaxSteps
        );
        let only_s = parse_maze("S..").unwrap();
        assert_eq!(
            run_bfs(&only_s, BfsMode::Bidirectional, 10).unwrap_err(),
            NcaError::MissingTarget
        );
    }
}
