//! Hand-coded neural cellular automata for grid pathfinding.
//!
//! Each algorithm is a fixed convolution layer plus a small forward pass over
//! a [`tensor::ChannelTensor`]: a bidirectional flood ([`bfs`]), shortest-path
//! extraction ([`extract`]), depth-first search with a neural stack ([`dfs`])
//! and the DFS-scheduled diameter computation ([`diameter`]). The [`oracle`]
//! module holds the classical algorithms the automata are checked against, and
//! [`evolve`] mutates datasets toward mazes a solver gets wrong.

pub mod bfs;
pub mod cli;
pub mod dfs;
pub mod diameter;
pub mod error;
pub mod evolve;
pub mod extract;
pub mod grid;
pub mod oracle;
pub mod par;
pub mod tensor;

pub use error::NcaError;
pub use grid::{parse_maze, render_maze, Maze, PathMask, Task, Tile};

/// Generator behind every seeded operation: ChaCha with 8 rounds.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
