//! Binary per-step channel dumps.
//!
//! Layout: `b"NCAT"`, then little-endian u32 version, C, H, W, steps, then
//! `steps·C·H·W` little-endian f32 values (step, channel, row, column order).

use std::io::{self, Read, Write};

use crate::bfs::{self, BfsMode};
use crate::dfs::{self, DfsConfig};
use crate::error::NcaError;
use crate::extract;
use crate::grid::Maze;
use crate::tensor::ChannelTensor;

pub const MAGIC: &[u8; 4] = b"NCAT";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Bfs,
    Extract,
    Dfs,
}

impl Algo {
    pub fn channel_names(self) -> &'static [&'static str] {
        match self {
            Algo::Bfs => &["flood_s", "flood_t", "age"],
            Algo::Extract => &["path", "path_up", "path_left", "path_right", "path_down"],
            Algo::Dfs => &dfs::CHANNEL_NAMES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    /// Hidden state after each step.
    pub frames: Vec<ChannelTensor>,
}

impl TraceFile {
    pub fn byte_len(&self) -> usize {
        HEADER_LEN + 4 * self.frames.len() * self.channels * self.height * self.width
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        for v in [
            VERSION,
            self.channels as u32,
            self.height as u32,
            self.width as u32,
            self.frames.len() as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for f in &self.frames {
            for &v in f.data() {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> io::Result<TraceFile> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not a trace file"));
        }
        let mut word = || -> io::Result<usize> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b) as usize)
        };
        if word()? != VERSION as usize {
            return Err(bad("unsupported trace version"));
        }
        let (c, h, w, steps) = (word()?, word()?, word()?, word()?);
        let mut frames = Vec::with_capacity(steps);
        let mut buf = vec![0u8; 4 * c * h * w];
        for _ in 0..steps {
            r.read_exact(&mut buf)?;
            let data = buf
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            frames.push(ChannelTensor::from_vec(c, h, w, data));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(bad("trailing bytes after last frame"));
        }
        Ok(TraceFile {
            channels: c,
            height: h,
            width: w,
            frames,
        })
    }
}

/// Runs `algo` on `maze` and records every step.
///
/// `start` is the DFS start tile; extraction traces cover the extraction steps
/// only, after the flood has met.
pub fn record(maze: &Maze, algo: Algo, start: Option<usize>) -> Result<TraceFile, NcaError> {
    let mut frames = Vec::new();
    let max = bfs::default_max_steps(maze);
    match algo {
        Algo::Bfs => {
            let r = bfs::run_bfs_observed(maze, BfsMode::Bidirectional, max, |s| {
                frames.push(s.hidden.clone())
            })?;
            if !r.met {
                return Err(NcaError::FloodsNotMet);
            }
        }
        Algo::Extract => {
            let flood = bfs::run_bfs(maze, BfsMode::Bidirectional, max)?;
            extract::run_extract_observed(&flood, max, |s| frames.push(s.hidden.clone()))?;
        }
        Algo::Dfs => {
            let start = start
                .or_else(|| maze.source())
                .or_else(|| (0..maze.len()).find(|&i| maze.is_open(i)))
                .ok_or(NcaError::NoOpenTile)?;
            dfs::run_dfs_observed(maze, start, &DfsConfig::for_maze(maze), |s, _| {
                frames.push(s.hidden.clone())
            })?;
        }
    }
    Ok(TraceFile {
        channels: algo.channel_names().len(),
        height: maze.height(),
        width: maze.width(),
        frames,
    })
}

/// Text animation of one channel: walls `#`, zero `.`, small integers as
/// digits, anything else `*`.
pub fn render_channel(trace: &TraceFile, maze: &Maze, channel: usize) -> String {
    let mut out = String::new();
    for (k, f) in trace.frames.iter().enumerate() {
        out.push_str(&format!("step {}\n", k + 1));
        let plane = f.plane(channel);
        for r in 0..trace.height {
            for c in 0..trace.width {
                let i = r * trace.width + c;
                let v = plane[i];
                let ch = if maze.tile(i).is_wall() && v == 0.0 {
                    '#'
                } else if v == 0.0 {
                    '.'
                } else if v.fract() == 0.0 && (1.0..=9.0).contains(&v) {
                    char::from_digit(v as u32, 10).unwrap()
                } else {
                    '*'
                };
                out.push(ch);
            }
            out.push('\n');
        }
    }
    out
}
