#![allow(dead_code)]

use nca_pathfind::grid::{Maze, Tile};
use nca_pathfind::oracle;
use proptest::prelude::*;

/// Random wall layout of the given size range, no endpoints.
pub fn raw_maze(min: usize, max: usize) -> impl Strategy<Value = Maze> {
    (min..=max, min..=max).prop_flat_map(|(h, w)| {
        prop::collection::vec(prop::bool::weighted(0.4), h * w).prop_map(move |walls| {
            let tiles = walls
                .into_iter()
                .map(|wall| if wall { Tile::Wall } else { Tile::Empty })
                .collect();
            Maze::from_tiles(w, h, tiles).unwrap()
        })
    })
}

/// Keeps only the largest connected component open; `None` if it has one tile.
pub fn largest_component(maze: &Maze) -> Option<Maze> {
    let comps = oracle::components(maze);
    let best = comps.iter().max_by_key(|c| c.len())?;
    if best.len() < 2 {
        return None;
    }
    let mut tiles = vec![Tile::Wall; maze.len()];
    for &i in best {
        tiles[i] = Tile::Empty;
    }
    Some(Maze::from_tiles(maze.width(), maze.height(), tiles).unwrap())
}

/// Connected maze with source at its first open tile and target at its last.
pub fn connected_task(maze: &Maze) -> Option<Maze> {
    let m = largest_component(maze)?;
    let open: Vec<usize> = (0..m.len()).filter(|&i| m.is_open(i)).collect();
    Some(
        m.with_tile(open[0], Tile::Source)
            .with_tile(*open.last().unwrap(), Tile::Target),
    )
}
