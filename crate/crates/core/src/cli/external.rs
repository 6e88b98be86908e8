//! Line protocol for solvers running in a child process.
//!
//! Request: `SOLVE <H> <W>` followed by `H` maze rows. Reply: `H` lines of `W`
//! space-separated reals, then `END`. Values are clipped to [0, 1].

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::evolve::Solver;
use crate::grid::{render_maze, Maze, Task};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("solver exited ({0})")]
    Exited(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The request text for one maze.
pub fn request(maze: &Maze) -> String {
    let body = render_maze(maze, None).expect("no overlay");
    format!("SOLVE {} {}\n{}\n", maze.height(), maze.width(), body)
}

/// Parses `H` rows of `W` reals followed by `END`, clipping to [0, 1].
pub fn parse_reply<I, S>(lines: I, height: usize, width: usize) -> Result<Vec<f64>, ProtocolError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut out = Vec::with_capacity(height * width);
    let mut rows = 0;
    #[allow(clippy::explicit_counter_loop)]
    for line in lines {
        let line = line.as_ref().trim();
        if line == "END" {
            if rows != height {
                return Err(ProtocolError::Malformed(format!(
                    "{rows} rows, expected {height}"
                )));
            }
            return Ok(out);
        }
        if rows == height {
            return Err(ProtocolError::Malformed("missing END".into()));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| ProtocolError::Malformed(format!("bad number {t:?}")))
            })
            .collect::<Result<_, _>>()?;
        if vals.len() != width {
            return Err(ProtocolError::Malformed(format!(
                "row {rows} has {} values, expected {width}",
                vals.len()
            )));
        }
        out.extend(
            vals.into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }),
        );
        rows += 1;
    }
    Err(ProtocolError::Malformed("reply ended before END".into()))
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// A long-lived child process speaking the protocol.
pub struct ExternalSolver {
    name: String,
    timeout: Duration,
    session: Mutex<Session>,
}

impl ExternalSolver {
    pub fn spawn(
        program: &str,
        args: &[String],
        timeout: Duration,
    ) -> Result<ExternalSolver, ProtocolError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalSolver {
            name: program.to_string(),
            timeout,
            session: Mutex::new(Session {
                child,
                stdin,
                lines: rx,
            }),
        })
    }

    pub fn query(&self, maze: &Maze) -> Result<Vec<f64>, ProtocolError> {
        let mut s = self.session.lock().unwrap_or_else(|e| e.into_inner());
        let deadline = Instant::now() + self.timeout;
        let sent = s
            .stdin
            .write_all(request(maze).as_bytes())
            .and_then(|_| s.stdin.flush());
        if sent.is_err() {
            return Err(exit_error(&mut s.child));
        }
        let mut lines = Vec::with_capacity(maze.height() + 1);
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            match s.lines.recv_timeout(left) {
                Ok(line) => {
                    let line = line?;
                    let done = line.trim() == "END";
                    lines.push(line);
                    if done {
                        return parse_reply(&lines, maze.height(), maze.width());
                    }
                    if lines.len() > maze.height() + 1 {
                        return Err(ProtocolError::Malformed("missing END".into()));
                    }
                }
                Err(RecvTimeoutError::Timeout) => return Err(ProtocolError::Timeout(self.timeout)),
                Err(RecvTimeoutError::Disconnected) => return Err(exit_error(&mut s.child)),
            }
        }
    }
}

fn exit_error(child: &mut Child) -> ProtocolError {
    match child.wait() {
        Ok(status) => ProtocolError::Exited(status.to_string()),
        Err(e) => ProtocolError::Io(e),
    }
}

impl Drop for ExternalSolver {
    fn drop(&mut self) {
        let s = self.session.get_mut().unwrap_or_else(|e| e.into_inner());
        let _ = s.child.kill();
        let _ = s.child.wait();
    }
}

impl Solver for ExternalSolver {
    fn name(&self) -> &str {
        &self.name
    }

    fn solve(&self, maze: &Maze, _task: Task) -> anyhow::Result<Vec<f64>> {
        Ok(self.query(maze)?)
    }
}
