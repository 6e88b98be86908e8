//! Classical reference algorithms: plain queue BFS, explicit-stack DFS and
//! all-pairs diameter. Every automaton in this crate is checked against these.

use std::collections::VecDeque;

use thiserror::Error;

use crate::grid::{Direction, Maze, PathMask};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("maze has no source tile")]
    MissingSource,
    #[error("maze has no target tile")]
    MissingTarget,
    #[error("target is unreachable from source")]
    Unreachable,
    #[error("tile {0} is a wall")]
    StartOnWall(usize),
    #[error("maze has no open tile")]
    NoOpenTile,
    #[error("prediction has {found} cells, truth has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("truth mask is empty but prediction is not")]
    EmptyTruth,
}

/// Per-tile move counts from one source; `None` for walls and unreachable tiles.
pub type DistanceMap = Vec<Option<usize>>;

pub fn bfs_distances(maze: &Maze, source: usize) -> DistanceMap {
    let mut dist = vec![None; maze.len()];
    if !maze.is_open(source) {
        return dist;
    }
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued tiles have a distance");
        for (_, v) in maze.open_neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Connected components of open tiles, each listed in row-major order;
/// components are ordered by their first tile.
pub fn components(maze: &Maze) -> Vec<Vec<usize>> {
    let mut seen = vec![false; maze.len()];
    let mut out = Vec::new();
    for start in 0..maze.len() {
        if seen[start] || !maze.is_open(start) {
            continue;
        }
        let mut comp: Vec<usize> = bfs_distances(maze, start)
            .iter()
            .enumerate()
            .filter_map(|(i, d)| d.map(|_| i))
            .collect();
        comp.sort_unstable();
        for &i in &comp {
            seen[i] = true;
        }
        out.push(comp);
    }
    out
}

/// Largest distance from `source` within its component.
pub fn eccentricity(maze: &Maze, source: usize) -> usize {
    bfs_distances(maze, source)
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
}

/// Length in moves and the union of all shortest source–target paths.
pub fn shortest_path_union(maze: &Maze) -> Result<(usize, PathMask), OracleError> {
    let s = maze.source().ok_or(OracleError::MissingSource)?;
    let t = maze.target().ok_or(OracleError::MissingTarget)?;
    union_between(maze, s, t)
}

/// Union of all shortest paths between two arbitrary open tiles.
pub fn union_between(maze: &Maze, a: usize, b: usize) -> Result<(usize, PathMask), OracleError> {
    let da = bfs_distances(maze, a);
    let d = da[b].ok_or(OracleError::Unreachable)?;
    let db = bfs_distances(maze, b);
    let mut mask = PathMask::for_maze(maze);
    for v in 0..maze.len() {
        if let (Some(x), Some(y)) = (da[v], db[v]) {
            if x + y == d {
                mask.set(v);
            }
        }
    }
    Ok((d, mask))
}

/// Explicit-stack DFS with move priority down, right, up, left.
///
/// On leaving a tile, the pebble moves to the highest-priority unvisited
/// neighbor and pushes the remaining unvisited neighbors, tagged with the
/// push time and a direction rank (down 0.2 … left 0.8). A tile pushed again
/// is refreshed. When no neighbor is unvisited, the most recently pushed entry
/// is popped, ties going to the lowest direction rank.
pub fn dfs_order(maze: &Maze, start: usize) -> Result<Vec<usize>, OracleError> {
    if !maze.is_open(start) {
        return Err(OracleError::StartOnWall(start));
    }
    let mut visited = vec![false; maze.len()];
    // (push time, direction rank) for tiles currently on the stack
    let mut stacked: Vec<Option<(usize, usize)>> = vec![None; maze.len()];
    let mut order = vec![start];
    visited[start] = true;
    let mut cur = start;
    let mut clock = 0usize;
    loop {
        clock += 1;
        let avail: Vec<(Direction, usize)> = maze
            .open_neighbors(cur)
            .filter(|&(_, n)| !visited[n])
            .collect();
        let next = if let Some(&(_, first)) = avail.first() {
            for &(dir, n) in &avail[1..] {
                let rank = Direction::PRIORITY.iter().position(|&d| d == dir).unwrap();
                stacked[n] = Some((clock, rank));
            }
            stacked[first] = None;
            first
        } else {
            let best = stacked
                .iter()
                .enumerate()
                .filter_map(|(i, e)| e.map(|(t, r)| (i, t, r)))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)));
            match best {
                Some((i, _, _)) => {
                    stacked[i] = None;
                    i
                }
                None => break,
            }
        };
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    Ok(order)
}

/// Longest shortest path over all components, in tiles (moves + 1), with its
/// endpoints. Endpoints tie-break row-major on the first, then the second tile.
pub fn diameter_oracle(maze: &Maze) -> Result<(usize, (usize, usize)), OracleError> {
    let mut best: Option<(usize, (usize, usize))> = None;
    for a in (0..maze.len()).filter(|&i| maze.is_open(i)) {
        let dist = bfs_distances(maze, a);
        for (b, d) in dist.iter().enumerate() {
            if let Some(d) = *d {
                if best.is_none_or(|(bd, _)| d > bd) {
                    best = Some((d, (a, b)));
                }
            }
        }
    }
    best.map(|(d, ends)| (d + 1, ends))
        .ok_or(OracleError::NoOpenTile)
}

/// One shortest path ending at `b`, walked back through neighbors one move
/// closer in `dist`, taking the first in priority order at each tile.
pub fn walk_back(maze: &Maze, dist: &[Option<usize>], b: usize) -> Option<PathMask> {
    let mut mask = PathMask::for_maze(maze);
    let mut cur = b;
    let mut d = dist[b]?;
    mask.set(cur);
    while d > 0 {
        let (_, prev) = maze
            .open_neighbors(cur)
            .find(|&(_, n)| dist[n] == Some(d - 1))?;
        cur = prev;
        d -= 1;
        mask.set(cur);
    }
    Some(mask)
}

/// Diameter endpoints joined by one shortest path.
pub fn diameter_witness(maze: &Maze) -> Result<(usize, (usize, usize), PathMask), OracleError> {
    let (len, (a, b)) = diameter_oracle(maze)?;
    let path = walk_back(maze, &bfs_distances(maze, a), b).ok_or(OracleError::Unreachable)?;
    Ok((len, (a, b), path))
}

/// Mean squared error between a prediction (clipped to [0, 1]) and a mask.
pub fn mse(predicted: &[f64], truth: &PathMask) -> Result<f64, OracleError> {
    if predicted.len() != truth.bits.len() {
        return Err(OracleError::DimensionMismatch {
            expected: truth.bits.len(),
            found: predicted.len(),
        });
    }
    let sum: f64 = predicted
        .iter()
        .zip(&truth.bits)
        .map(|(&p, &t)| {
            let e = p.clamp(0.0, 1.0) - if t { 1.0 } else { 0.0 };
            e * e
        })
        .sum();
    Ok(sum / truth.bits.len() as f64)
}

/// Accuracy in percent, normalized so the all-zeros output scores 0 and a
/// perfect output scores 100. Can be negative.
pub fn normalized_accuracy(predicted: &[f64], truth: &PathMask) -> Result<f64, OracleError> {
    let err = mse(predicted, truth)?;
    let zero_err = truth.count() as f64 / truth.bits.len() as f64;
    if zero_err == 0.0 {
        return if err == 0.0 {
            Ok(100.0)
        } else {
            Err(OracleError::EmptyTruth)
        };
    }
    Ok(100.0 * (1.0 - err / zero_err))
}
