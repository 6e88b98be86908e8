//! JSON-Lines dataset files.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolve::Sample;
use crate::grid::{generate_maze, parse_maze, GenConfig, GridError, Maze, PathMask, Task};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub d_tiles: usize,
    pub seed: u64,
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub task: Task,
    pub maze: Vec<String>,
    pub solution: Vec<String>,
    pub meta: Meta,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl DatasetRecord {
    pub fn from_sample(s: &Sample) -> DatasetRecord {
        let w = s.maze.width();
        let maze = crate::grid::render_maze(&s.maze, None)
            .expect("no overlay")
            .lines()
            .map(str::to_string)
            .collect();
        let solution = s
            .solution
            .bits
            .chunks(w)
            .map(|row| row.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect();
        DatasetRecord {
            id: s.id.clone(),
            task: s.task,
            maze,
            solution,
            meta: Meta {
                d_tiles: s.solution.count(),
                seed: s.seed,
            },
        }
    }

    /// Parses and checks the record's maze and solution.
    pub fn to_sample(&self) -> Result<Sample, String> {
        let maze = parse_maze(&self.maze.join("\n")).map_err(|e| e.to_string())?;
        let solution = parse_solution(&self.solution, &maze)?;
        if solution.count() != self.meta.d_tiles {
            return Err(format!(
                "d_tiles is {} but the solution has {} tiles",
                self.meta.d_tiles,
                solution.count()
            ));
        }
        Ok(Sample {
            id: self.id.clone(),
            task: self.task,
            maze,
            solution,
            seed: self.meta.seed,
        })
    }
}

fn parse_solution(rows: &[String], maze: &Maze) -> Result<PathMask, String> {
    let (h, w) = (maze.height(), maze.width());
    if rows.len() != h || rows.iter().any(|r| r.chars().count() != w) {
        return Err(format!("solution is not {h}×{w}"));
    }
    let mut mask = PathMask::empty(w, h);
    for (r, row) in rows.iter().enumerate() {
        for (c, ch) in row.chars().enumerate() {
            match ch {
                '0' => {}
                '1' if maze.at(r, c).is_wall() => {
                    return Err(format!("solution marks wall at row {r}, col {c}"))
                }
                '1' => mask.set(maze.index(r, c)),
                other => return Err(format!("invalid solution symbol {other:?}")),
            }
        }
    }
    Ok(mask)
}

pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let file = fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| DatasetError::Malformed {
            line: i + 1,
            message,
        };
        let rec: DatasetRecord =
            serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        rec.to_sample().map_err(malformed)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// `n` labeled mazes; record `i` uses seed `seed + i`.
pub fn generate_samples(
    task: Task,
    n: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<Vec<Sample>, GridError> {
    par::map_range(n, |i| {
        let s = seed.wrapping_add(i as u64);
        let cfg = GenConfig::new(width, height, task, s);
        let maze = generate_maze(&cfg, &mut cfg.rng())?;
        Ok(Sample::labeled(format!("{task}-{s}"), task, maze, s)
            .expect("generated mazes are solvable"))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let recs: Vec<DatasetRecord> = generate_samples(Task::ShortestPath, 5, 6, 6, 9)
            .unwrap()
            .iter()
            .map(DatasetRecord::from_sample)
            .collect();
        write_dataset(&path, &recs).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), recs);
        let first = fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("{\"id\":"));
    }

    #[test]
    fn empty_file_is_empty_dataset() {
        let f = tempfile::NamedTempFile::new().unwrap();
        assert!(read_dataset(f.path()).unwrap().is_empty());
    }

    #[test]
    fn bad_line_is_numbered() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let good = DatasetRecord::from_sample(
            &generate_samples(Task::ShortestPath, 1, 4, 4, 0).unwrap()[0],
        );
        let mut bad = good.clone();
        bad.solution.pop();
        writeln!(f, "{}", serde_json::to_string(&good).unwrap()).unwrap();
        writeln!(f, "{}", serde_json::to_string(&bad).unwrap()).unwrap();
        match read_dataset(f.path()) {
            Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed line 2, got {other:?}"),
        }
    }
}
