//! Diameter via DFS-scheduled single-source floods.
//!
//! The DFS automaton walks each connected component; every tile it visits
//! launches a single-source flood, and the source's age once that flood stops
//! growing gives the tile's eccentricity (`path_max`). The tile with the
//! largest `path_max` is one end of a diameter, and extraction between it and
//! its farthest tile yields the witness path.
//!
//! Each flood runs on its own tensor rather than sharing channels with
//! staggered neighbors. The launch schedule is still derived from the DFS
//! `since` counters and reported, so the staggering is observable.

use crate::bfs::{self, BfsMode};
use crate::dfs::{self, DfsConfig, DfsTrace};
use crate::error::NcaError;
use crate::extract;
use crate::grid::{Maze, PathMask, Tile};
use crate::oracle;
use crate::par;

/// One flood launch: cumulative step, tile, and wait since the previous launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Launch {
    pub launch_step: usize,
    pub tile: usize,
    pub waiting_time: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiameterRun {
    /// Eccentricity in moves per tile; 0 on walls.
    pub path_max: Vec<usize>,
    pub launch_schedule: Vec<Launch>,
    pub best_endpoint: usize,
    pub farthest: usize,
    /// Diameter in tiles.
    pub diameter_len: usize,
    /// One shortest path between `best_endpoint` and `farthest`.
    pub witness: PathMask,
    pub components: usize,
}

/// Launch times for the floods of one DFS run.
///
/// The wait before launching at `u` is `|since(prior) − since(u)|`, the number
/// of steps between the pebble leaving the previous tile and reaching `u`.
pub fn schedule_dijkstra_calls(trace: &DfsTrace) -> Vec<Launch> {
    let mut out = Vec::with_capacity(trace.visit_order.len());
    let mut clock = 0;
    let mut prior: Option<usize> = None;
    for &u in &trace.visit_order {
        let waiting_time = match prior {
            None => 0,
            Some(p) => (trace.since[p] - trace.since[u]).abs().round() as usize,
        };
        clock += waiting_time;
        out.push(Launch {
            launch_step: clock,
            tile: u,
            waiting_time,
        });
        prior = Some(u);
    }
    out
}

/// Eccentricity in moves from the source's age when its flood stops growing.
///
/// The flood is detected as settled one step after it last grew, and the
/// source has been flooded since the first step, so age = eccentricity + 1.
pub fn calibrate_eccentricity(fixpoint_age_at_source: i64) -> Result<usize, NcaError> {
    let moves = fixpoint_age_at_source - 1;
    usize::try_from(moves).map_err(|_| NcaError::NegativeEccentricity(fixpoint_age_at_source))
}

/// Settled single-source flood from `u`.
fn flood_from(maze: &Maze, u: usize) -> Result<bfs::BfsResult, NcaError> {
    let r = bfs::run_bfs(
        maze,
        BfsMode::SingleSource(u),
        bfs::default_max_steps(maze) + 2,
    )?;
    if !r.fixpoint {
        return Err(NcaError::MaxStepsExhausted(r.final_state.step));
    }
    Ok(r)
}

pub fn eccentricity_nca(maze: &Maze, u: usize) -> Result<usize, NcaError> {
    let r = flood_from(maze, u)?;
    calibrate_eccentricity(r.final_state.age()[u].round() as i64)
}

pub fn diameter_nca(maze: &Maze, cfg: &DfsConfig) -> Result<DiameterRun, NcaError> {
    let body = maze.without_endpoints();
    let comps = oracle::components(&body);
    if comps.is_empty() {
        return Err(NcaError::NoOpenTile);
    }

    let mut launch_schedule = Vec::new();
    let mut visited = Vec::new();
    let mut offset = 0;
    for comp in &comps {
        let trace = dfs::run_dfs(&body, comp[0], cfg)?;
        for mut l in schedule_dijkstra_calls(&trace) {
            l.launch_step += offset;
            launch_schedule.push(l);
        }
        offset = launch_schedule.last().map_or(offset, |l| l.launch_step);
        visited.extend(trace.visit_order);
    }

    let eccs = par::map_slice(&visited, |&u| eccentricity_nca(&body, u));
    let mut path_max = vec![0; body.len()];
    for (&u, e) in visited.iter().zip(eccs) {
        path_max[u] = e?;
    }

    let best_endpoint = (0..body.len())
        .filter(|&i| body.is_open(i))
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if path_max[b] >= path_max[i] => Some(b),
            _ => Some(i),
        })
        .ok_or(NcaError::NoOpenTile)?;

    // Farthest tile = the flooded tile with the smallest age.
    let flood = flood_from(&body, best_endpoint)?;
    let st = &flood.final_state;
    let farthest = (0..body.len())
        .filter(|&i| st.flood_s()[i] == 1.0)
        .fold(None, |best: Option<usize>, i| match best {
            Some(b) if st.age()[b] <= st.age()[i] => Some(b),
            _ => Some(i),
        })
        .ok_or(NcaError::NoOpenTile)?;

    let age_best = st.age()[best_endpoint];
    let dist: Vec<Option<usize>> = (0..body.len())
        .map(|i| (st.flood_s()[i] == 1.0).then(|| (age_best - st.age()[i]).round() as usize))
        .collect();
    let witness = witness_path(&body, best_endpoint, farthest, &dist)?;
    let diameter_len = path_max[best_endpoint] + 1;
    Ok(DiameterRun {
        path_max,
        launch_schedule,
        best_endpoint,
        farthest,
        diameter_len,
        witness,
        components: comps.len(),
    })
}

/// Extracts all shortest paths between `a` and `b`, then walks one of them
/// back from `b` using the flood distances from `a`.
fn witness_path(
    body: &Maze,
    a: usize,
    b: usize,
    dist: &[Option<usize>],
) -> Result<PathMask, NcaError> {
    if a == b {
        let mut single = PathMask::for_maze(body);
        single.set(a);
        return Ok(single);
    }
    let task = body.with_tile(a, Tile::Source).with_tile(b, Tile::Target);
    let union = extract::solve(&task)?.mask;
    oracle::walk_back(body, dist, b)
        .filter(|path| path.get(a) && path.is_subset_of(&union))
        .ok_or(NcaError::ExtractionIncomplete)
}
