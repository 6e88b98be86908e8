//! The `ncapath` command line.

pub mod dataset;
pub mod external;
pub mod trace;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::dfs::{self, DfsConfig};
use crate::diameter;
use crate::evolve::{self, BudgetedNca, EvolutionConfig, OracleSolver, Solver, ZerosSolver};
use crate::extract;
use crate::grid::{parse_maze, render_maze, Maze, Task};
use crate::oracle;
use crate::par;
use dataset::{generate_samples, read_dataset, write_dataset, DatasetRecord};
use trace::Algo;

#[derive(Debug, Parser)]
#[command(
    name = "ncapath",
    version,
    about = "Hand-coded NCA pathfinding on grid mazes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaskArg {
    ShortestPath,
    Diameter,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::ShortestPath => Task::ShortestPath,
            TaskArg::Diameter => Task::Diameter,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgoArg {
    Bfs,
    Extract,
    Dfs,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::Bfs => Algo::Bfs,
            AlgoArg::Extract => Algo::Extract,
            AlgoArg::Dfs => Algo::Dfs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Oracle,
    Zeros,
    Budgeted,
    External,
}

#[derive(Debug, Args)]
struct SizeArgs {
    /// Side length of square mazes.
    #[arg(long, default_value_t = 16)]
    size: usize,
    /// Width, overriding --size.
    #[arg(long)]
    width: Option<usize>,
    /// Height, overriding --size.
    #[arg(long)]
    height: Option<usize>,
}

impl SizeArgs {
    fn dims(&self) -> (usize, usize) {
        (
            self.width.unwrap_or(self.size),
            self.height.unwrap_or(self.size),
        )
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labeled dataset as JSON Lines.
    Gen {
        #[arg(long, value_enum, default_value = "shortest-path")]
        task: TaskArg,
        #[arg(long, default_value_t = 8192)]
        n: usize,
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a shortest-path maze with flood and extraction.
    Solve {
        /// Maze file, or `-` for standard input.
        #[arg(long)]
        maze: PathBuf,
    },
    /// Print the DFS visit order.
    Dfs {
        #[arg(long)]
        maze: PathBuf,
        /// Start tile as `row,col`; defaults to the source or first open tile.
        #[arg(long)]
        start: Option<String>,
    },
    /// Compute the diameter with DFS-scheduled floods.
    Diameter {
        #[arg(long)]
        maze: PathBuf,
    },
    /// Check the automata against the oracles on generated mazes.
    Verify {
        #[arg(long, value_enum, default_value = "shortest-path")]
        task: TaskArg,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evolve a dataset against a solver.
    Evolve {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "budgeted")]
        solver: SolverArg,
        /// Command line of the external solver.
        #[arg(long)]
        solver_cmd: Option<String>,
        /// Per-maze timeout for the external solver, in seconds.
        #[arg(long, default_value_t = 30)]
        timeout: u64,
        #[arg(long, default_value_t = 1)]
        generations: usize,
        /// Mean-loss threshold below which the dataset is mutated.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        flips: Option<usize>,
        /// Step budget of the built-in budgeted solver.
        #[arg(long, default_value_t = evolve::DEFAULT_STEP_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Per-generation statistics as CSV.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Write a binary per-step trace.
    Trace {
        #[arg(long)]
        maze: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one channel step by step.
    Render {
        #[arg(long)]
        maze: PathBuf,
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Channel name; defaults to the algorithm's first channel.
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        start: Option<String>,
    },
}

/// Bad arguments or input; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `argv` (program name first), runs the command, and returns the exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match par::with_threads(par::threads_from_env(), || {
        run(cli.command, &mut io::stdout())
    }) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn read_maze(path: &Path) -> anyhow::Result<Maze> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    parse_maze(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_start(maze: &Maze, start: Option<&str>) -> anyhow::Result<Option<usize>> {
    let Some(s) = start else { return Ok(None) };
    let (r, c) = s
        .split_once(',')
        .and_then(|(r, c)| {
            Some((
                r.trim().parse::<usize>().ok()?,
                c.trim().parse::<usize>().ok()?,
            ))
        })
        .ok_or_else(|| usage(format!("--start expects row,col, got {s:?}")))?;
    if r >= maze.height() || c >= maze.width() {
        return Err(usage(format!("start {r},{c} is outside the maze")));
    }
    let i = maze.index(r, c);
    if !maze.is_open(i) {
        return Err(usage(format!("start {r},{c} is a wall")));
    }
    Ok(Some(i))
}

fn coords(maze: &Maze, i: usize) -> String {
    let (r, c) = maze.coords(i);
    format!("{r},{c}")
}

fn run(cmd: Command, out: &mut impl Write) -> anyhow::Result<i32> {
    match cmd {
        Command::Gen {
            task,
            n,
            size,
            seed,
            out: path,
        } => {
            let (w, h) = size.dims();
            let samples =
                generate_samples(task.into(), n, w, h, seed).map_err(|e| usage(e.to_string()))?;
            let recs: Vec<DatasetRecord> = samples.iter().map(DatasetRecord::from_sample).collect();
            write_dataset(&path, &recs)?;
            writeln!(out, "wrote {} records to {}", recs.len(), path.display())?;
        }
        Command::Solve { maze } => {
            let m = read_maze(&maze)?;
            if oracle::shortest_path_union(&m).is_err() {
                if m.source().is_none() || m.target().is_none() {
                    return Err(usage("maze needs one source and one target"));
                }
                bail!("unreachable: target cannot be reached from source");
            }
            let r = extract::solve(&m)?;
            write!(out, "{}", render_maze(&m, Some(&r.mask))?)?;
            writeln!(out, "\nd_tiles {}", r.mask.count())?;
        }
        Command::Dfs { maze, start } => {
            let m = read_maze(&maze)?;
            let start = parse_start(&m, start.as_deref())?
                .or_else(|| m.source())
                .or_else(|| (0..m.len()).find(|&i| m.is_open(i)))
                .ok_or_else(|| usage("maze has no open tile"))?;
            let t = dfs::run_dfs(&m, start, &DfsConfig::for_maze(&m))?;
            let order: Vec<String> = t.visit_order.iter().map(|&i| coords(&m, i)).collect();
            writeln!(out, "visit order: {}", order.join(" "))?;
            writeln!(out, "steps {} pops {}", t.steps_used, t.pop_events.len())?;
        }
        Command::Diameter { maze } => {
            let m = read_maze(&maze)?;
            let r = diameter::diameter_nca(&m, &DfsConfig::for_maze(&m))
                .map_err(|e| usage(e.to_string()))?;
            writeln!(out, "diameter {} tiles", r.diameter_len)?;
            writeln!(
                out,
                "endpoints {} {}",
                coords(&m, r.best_endpoint),
                coords(&m, r.farthest)
            )?;
            write!(
                out,
                "{}",
                render_maze(&m.without_endpoints(), Some(&r.witness))?
            )?;
            writeln!(out)?;
        }
        Command::Verify {
            task,
            n,
            size,
            seed,
        } => {
            let (w, h) = size.dims();
            let samples =
                generate_samples(task.into(), n, w, h, seed).map_err(|e| usage(e.to_string()))?;
            let ok = par::map_slice(&samples, |s| nca_matches_oracle(&s.maze, s.task));
            let exact = ok.iter().filter(|&&b| b).count();
            writeln!(out, "{exact}/{n} exact")?;
            return Ok(if exact == n { 0 } else { 1 });
        }
        Command::Evolve {
            dataset,
            solver,
            solver_cmd,
            timeout,
            generations,
            tau,
            batch,
            flips,
            budget,
            seed,
            out: path,
            stats,
        } => {
            let recs = read_dataset(&dataset).map_err(|e| usage(e.to_string()))?;
            let samples = recs
                .iter()
                .map(|r| r.to_sample().map_err(usage))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let Some(first) = samples.first() else {
                return Err(usage("dataset is empty"));
            };
            let task = first.task;
            let mut cfg =
                EvolutionConfig::for_size(first.maze.width(), first.maze.height(), task, seed);
            cfg.generations = generations;
            cfg.batch_size = batch.unwrap_or(cfg.batch_size).min(samples.len());
            cfg.loss_threshold = tau.unwrap_or(cfg.loss_threshold);
            cfg.n_flips = flips.unwrap_or(cfg.n_flips);
            let solver: Box<dyn Solver> = match solver {
                SolverArg::Oracle => Box::new(OracleSolver),
                SolverArg::Zeros => Box::new(ZerosSolver),
                SolverArg::Budgeted => Box::new(BudgetedNca { budget }),
                SolverArg::External => {
                    let cmd =
                        solver_cmd.ok_or_else(|| usage("--solver external needs --solver-cmd"))?;
                    let mut parts = cmd.split_whitespace().map(str::to_string);
                    let program = parts.next().ok_or_else(|| usage("empty --solver-cmd"))?;
                    let args: Vec<String> = parts.collect();
                    Box::new(external::ExternalSolver::spawn(
                        &program,
                        &args,
                        Duration::from_secs(timeout),
                    )?)
                }
            };
            let (evolved, gen_stats) = evolve::run_evolution(samples, solver.as_ref(), &cfg)?;
            let recs: Vec<DatasetRecord> = evolved.iter().map(DatasetRecord::from_sample).collect();
            write_dataset(&path, &recs)?;
            if let Some(p) = stats {
                let mut w = csv::Writer::from_path(&p)?;
                for s in &gen_stats {
                    w.serialize(s)?;
                }
                w.flush()?;
            }
            for s in &gen_stats {
                writeln!(
                    out,
                    "generation {} loss {:.6} path tiles {:.3} mask tiles {:.3} replaced {}{}",
                    s.generation,
                    s.mean_loss,
                    s.mean_path_tiles,
                    s.mean_length,
                    s.replacements,
                    if s.gated { " (gated)" } else { "" }
                )?;
            }
        }
        Command::Trace {
            maze,
            algo,
            start,
            out: path,
        } => {
            let m = read_maze(&maze)?;
            let start = parse_start(&m, start.as_deref())?;
            let t = trace::record(&m, algo.into(), start)?;
            let mut w = io::BufWriter::new(fs::File::create(&path)?);
            t.write_to(&mut w)?;
            w.flush()?;
            writeln!(
                out,
                "wrote {} steps ({} bytes) to {}",
                t.frames.len(),
                t.byte_len(),
                path.display()
            )?;
        }
        Command::Render {
            maze,
            algo,
            channel,
            start,
        } => {
            let m = read_maze(&maze)?;
            let start = parse_start(&m, start.as_deref())?;
            let algo: Algo = algo.into();
            let names = algo.channel_names();
            let ch = match channel {
                None => 0,
                Some(name) => names.iter().position(|&n| n == name).ok_or_else(|| {
                    usage(format!(
                        "unknown channel {name:?}; expected one of {}",
                        names.join(", ")
                    ))
                })?,
            };
            let t = trace::record(&m, algo, start)?;
            write!(out, "{}", trace::render_channel(&t, &m, ch))?;
        }
    }
    Ok(0)
}

/// Whether the automata reproduce the oracle exactly on one maze.
pub fn nca_matches_oracle(maze: &Maze, task: Task) -> bool {
    match task {
        Task::ShortestPath => match (extract::solve(maze), oracle::shortest_path_union(maze)) {
            (Ok(r), Ok((_, truth))) => r.mask == truth,
            _ => false,
        },
        Task::Diameter => match (
            diameter::diameter_nca(maze, &DfsConfig::for_maze(maze)),
            oracle::diameter_witness(maze),
        ) {
            (Ok(r), Ok((len, ends, _))) => {
                r.diameter_len == len && (r.best_endpoint, r.farthest) == ends
            }
            _ => false,
        },
    }
}
