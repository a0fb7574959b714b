//! The `bpl` command line.
//!
//! Exit codes: 0 completed, 2 unrealizable specification or requirements
//! conflict, 1 usage or model error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::arbiter::{Arbiter, RandomArbiter};
use crate::error::{Error, Result};
use crate::experiment::{
    bench, default_corpus_dir, load_corpus, noise_experiment, write_bench_csv, write_noise_csv,
    NoiseConfig,
};
use crate::explorer::{explore, ExploreLimits, ExploredLts};
use crate::gba::{solve, to_gba, GbaArbiter};
use crate::mdp::{
    compatible_events, epsilon_diagnostic, q_learning, value_iteration, DeadEndPolicy, LabelMode,
    MdpArbiter, MdpModel, QLearningConfig, QTable, RunContext, DEFAULT_EPSILON, DEFAULT_GAMMA,
    DEFAULT_TOL,
};
use crate::models::level_crossing::{
    level_crossing, level_crossing_with_fixes, LevelCrossingConfig,
};
use crate::models::sokoban::{sokoban_from_board, LivenessMode};
use crate::patterns::{check_pattern, PatternKind};
use crate::program::BProgram;
use crate::trace::{run, TerminationReason};
use crate::verifier::verify_explored;

#[derive(Parser, Debug)]
#[command(
    name = "bpl",
    version,
    about = "Liveness-enforcing execution of behavioral programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute a program and print the trace.
    Run(RunArgs),
    /// Export the reachable state graph.
    Explore(ExploreArgs),
    /// Solve the liveness game (GBA) or the liveness MDP.
    Solve(SolveArgs),
    /// Check realizability and report hot-lasso counterexamples.
    Verify(VerifyArgs),
    /// Compare pattern threads with their LTL formulas on bounded lassos.
    PatternsCheck(PatternsArgs),
    /// Time both backends over the board corpus.
    Bench(BenchArgs),
    /// Live-run rate of the MDP arbiter under Gaussian Q noise.
    NoiseExp(NoiseArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Model {
    LevelCrossing,
    Sokoban,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Variant {
    /// Sensors, barriers, passenger looper, requesters and the freight gap.
    Full,
    /// Requesters and the freight gap only.
    Scaled,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value = "level-crossing")]
    model: Model,
    /// Level-crossing TOML config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full")]
    variant: Variant,
    /// Required approaches per requester.
    #[arg(long)]
    n: Option<u32>,
    /// Number of maintenance railways.
    #[arg(long)]
    m: Option<u32>,
    /// Freight gap: a maintenance approach is needed after k-1 freights.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    no_passenger: bool,
    #[arg(long)]
    no_barriers: bool,
    #[arg(long)]
    no_gap: bool,
    #[arg(long)]
    no_must_finish: bool,
    /// Add the scheduling fix threads.
    #[arg(long)]
    with_fixes: bool,
    /// Sokoban board file.
    #[arg(long)]
    board: Option<PathBuf>,
    #[arg(long, default_value = "all-boxes")]
    liveness: String,
    #[arg(long, default_value_t = ExploreLimits::default().max_states)]
    max_states: usize,
}

impl ModelArgs {
    fn limits(&self) -> ExploreLimits {
        ExploreLimits {
            max_states: self.max_states,
            ..ExploreLimits::default()
        }
    }

    fn program(&self) -> Result<BProgram> {
        match self.model {
            Model::Sokoban => {
                let path = self.board.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("--board is required for sokoban".into())
                })?;
                let mode: LivenessMode = self.liveness.parse()?;
                sokoban_from_board(&fs::read_to_string(path)?, mode)
            }
            Model::LevelCrossing => {
                let mut c = match &self.config {
                    Some(p) => LevelCrossingConfig::from_toml_str(&fs::read_to_string(p)?)?,
                    None => match self.variant {
                        Variant::Full => LevelCrossingConfig::motivating(),
                        Variant::Scaled => LevelCrossingConfig::scaled(3, 1, 2),
                    },
                };
                if let Some(n) = self.n {
                    c.freight_count = n;
                    c.maintenance_count = n;
                }
                if let Some(m) = self.m {
                    c.maintenance_lines = m;
                }
                if let Some(k) = self.k {
                    c.freight_gap = k;
                }
                c.include_passenger &= !self.no_passenger;
                c.include_barriers &= !self.no_barriers;
                c.include_freight_gap &= !self.no_gap;
                c.must_finish &= !self.no_must_finish;
                if self.with_fixes {
                    level_crossing_with_fixes(&c)
                } else {
                    level_crossing(&c)
                }
            }
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum RunBackend {
    Random,
    Gba,
    Mdp,
    Qlearn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TraceFormat {
    Text,
    Jsonl,
}

#[derive(Args, Debug)]
struct MdpArgs {
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value = "degeneralized")]
    label_mode: LabelMode,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "random")]
    backend: RunBackend,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_steps: usize,
    #[command(flatten)]
    mdp: MdpArgs,
    #[arg(long, default_value = "report")]
    dead_end_policy: DeadEndPolicy,
    /// Use a previously exported Q table instead of solving.
    #[arg(long)]
    q_table: Option<PathBuf>,
    /// Training episodes for the qlearn backend.
    #[arg(long, default_value_t = QLearningConfig::default().episodes)]
    episodes: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: TraceFormat,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Args, Debug)]
struct ExploreArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "dot")]
    format: GraphFormat,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolveBackend {
    Gba,
    Mdp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormat {
    Text,
    Json,
    Dot,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "gba")]
    backend: SolveBackend,
    #[command(flatten)]
    mdp: MdpArgs,
    /// Write the Q table here (mdp backend).
    #[arg(long)]
    export: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct PatternsArgs {
    /// Override the stem bound of every pattern.
    #[arg(long)]
    stem: Option<usize>,
    /// Override the loop bound of every pattern.
    #[arg(long = "loop")]
    loop_bound: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Restrict to one board name.
    #[arg(long)]
    board: Option<String>,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, value_delimiter = ',', default_values_t = NoiseConfig::default().sigmas)]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = NoiseConfig::default().max_steps)]
    max_steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a command that completed without an error.
enum Outcome {
    Done,
    /// Unrealizable or conflicting requirements; the message goes to stderr.
    Conflict(String),
}

/// Parses `args` (including the program name) and executes the command.
/// Returns the process exit code.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return 0;
        }
        Err(e) => {
            let _ = write!(err, "{e}");
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(Outcome::Done) => 0,
        Ok(Outcome::Conflict(msg)) => {
            let _ = writeln!(err, "{msg}");
            2
        }
        Err(Error::Unrealizable(msg)) => {
            let _ = writeln!(err, "unrealizable specification: {msg}");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<Outcome> {
    match cmd {
        Command::Run(a) => cmd_run(a, out),
        Command::Explore(a) => {
            let lts = explore(&a.model.program()?, a.model.limits())?;
            match a.format {
                GraphFormat::Dot => write!(out, "{}", lts.to_dot())?,
                GraphFormat::Json => {
                    writeln!(out, "{}", serde_json::to_string_pretty(&lts.to_json())?)?
                }
            }
            Ok(Outcome::Done)
        }
        Command::Solve(a) => cmd_solve(a, out),
        Command::Verify(a) => {
            let program = a.model.program()?;
            let lts = explore(&program, a.model.limits())?;
            let report = verify_explored(&program, &lts);
            if a.json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report.to_json())?)?;
            } else {
                write!(out, "{report}")?;
            }
            Ok(Outcome::Done)
        }
        Command::PatternsCheck(a) => {
            let mut failed = Vec::new();
            for kind in PatternKind::ALL {
                let (s, l) = kind.default_bounds();
                let r = check_pattern(kind, a.stem.unwrap_or(s), a.loop_bound.unwrap_or(l))?;
                writeln!(
                    out,
                    "{kind}: {} lassos (stem <= {}, loop <= {}), {} live, {} disagreements",
                    r.lassos,
                    r.stem_bound,
                    r.loop_bound,
                    r.live,
                    r.disagreements.len()
                )?;
                for d in &r.disagreements {
                    writeln!(out, "  {d}")?;
                }
                if !r.agrees() {
                    failed.push(kind.to_string());
                }
            }
            if failed.is_empty() {
                Ok(Outcome::Done)
            } else {
                Err(Error::InvalidConfig(format!(
                    "oracle disagreement in {}",
                    failed.join(", ")
                )))
            }
        }
        Command::Bench(a) => {
            let corpus = load_corpus(a.corpus.unwrap_or_else(default_corpus_dir))?;
            let rows = bench(&corpus, ExploreLimits::default())?;
            match a.out {
                Some(p) => write_bench_csv(&rows, fs::File::create(p)?)?,
                None => write_bench_csv(&rows, out)?,
            }
            Ok(Outcome::Done)
        }
        Command::NoiseExp(a) => {
            let mut corpus = load_corpus(a.corpus.unwrap_or_else(default_corpus_dir))?;
            if let Some(name) = &a.board {
                corpus.retain(|b| &b.name == name);
                if corpus.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "no board named `{name}` in the corpus"
                    )));
                }
            }
            let cfg = NoiseConfig {
                sigmas: a.sigmas,
                runs: a.runs,
                max_steps: a.max_steps,
                seed: a.seed,
                ..NoiseConfig::default()
            };
            let mut rows = Vec::new();
            for b in &corpus {
                rows.extend(noise_experiment(b, &cfg, ExploreLimits::default())?);
            }
            match a.out {
                Some(p) => write_noise_csv(&rows, fs::File::create(p)?)?,
                None => write_noise_csv(&rows, out)?,
            }
            Ok(Outcome::Done)
        }
    }
}

fn solve_mdp(lts: &ExploredLts, m: &MdpArgs) -> QTable {
    value_iteration(
        &MdpModel::new(lts, m.label_mode),
        m.gamma,
        DEFAULT_TOL,
        m.epsilon,
    )
}

fn cmd_run(a: RunArgs, out: &mut dyn Write) -> Result<Outcome> {
    let program = a.model.program()?;
    let mut arbiter: Box<dyn Arbiter> = match a.backend {
        RunBackend::Random => Box::new(RandomArbiter),
        RunBackend::Gba => Box::new(GbaArbiter::for_program(&program, a.model.limits())?),
        RunBackend::Mdp => {
            let q = match &a.q_table {
                Some(p) => QTable::load(p)?,
                None => solve_mdp(&explore(&program, a.model.limits())?, &a.mdp),
            };
            Box::new(MdpArbiter::new(Arc::new(q), a.dead_end_policy))
        }
        RunBackend::Qlearn => {
            let cfg = QLearningConfig {
                episodes: a.episodes,
                gamma: a.mdp.gamma,
                epsilon: a.mdp.epsilon,
                label_mode: a.mdp.label_mode,
                seed: a.seed,
                ..QLearningConfig::default()
            };
            Box::new(MdpArbiter::new(
                Arc::new(q_learning(&program, &cfg)),
                a.dead_end_policy,
            ))
        }
    };
    let trace = run(&program, &mut arbiter, a.max_steps, a.seed);
    match a.format {
        TraceFormat::Jsonl => trace.write_jsonl(&mut *out)?,
        TraceFormat::Text => {
            let threads: Vec<&str> = program.threads().iter().map(|t| t.id()).collect();
            writeln!(out, "threads: {}", threads.join(" "))?;
            let bits = |l: &[bool]| {
                l.iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect::<String>()
            };
            writeln!(out, "{:>5}  {:<32} {}", 0, "<init>", bits(&trace.labels[0]))?;
            for (t, e) in trace.events.iter().enumerate() {
                writeln!(
                    out,
                    "{:>5}  {:<32} {}",
                    t + 1,
                    e.to_string(),
                    bits(&trace.labels[t + 1])
                )?;
            }
            writeln!(out, "terminated: {}", trace.terminated)?;
        }
    }
    match (trace.terminated, trace.message) {
        (TerminationReason::ArbiterStuck, Some(msg)) => Ok(Outcome::Conflict(msg)),
        (TerminationReason::ArbiterStuck, None) => Ok(Outcome::Conflict("arbiter stuck".into())),
        _ => Ok(Outcome::Done),
    }
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write) -> Result<Outcome> {
    let program = a.model.program()?;
    let lts = explore(&program, a.model.limits())?;
    match a.backend {
        SolveBackend::Gba => {
            let ws = solve(&to_gba(&lts));
            match a.format {
                ReportFormat::Json => {
                    writeln!(out, "{}", serde_json::to_string_pretty(&ws.to_json())?)?
                }
                ReportFormat::Dot => write!(out, "{}", ws.to_dot(&lts))?,
                ReportFormat::Text => {
                    writeln!(out, "states: {}", lts.state_count())?;
                    writeln!(out, "winning: {}", ws.winning_count())?;
                    writeln!(out, "accepting sccs: {}", ws.accepting_sccs().len())?;
                    writeln!(out, "init winning: {}", ws.init_winning())?;
                }
            }
            if ws.init_winning() {
                Ok(Outcome::Done)
            } else {
                Ok(Outcome::Conflict(format!(
                    "unrealizable specification: {}",
                    ws.unrealizable_reason()
                )))
            }
        }
        SolveBackend::Mdp => {
            let q = solve_mdp(&lts, &a.mdp);
            if let Some(p) = &a.export {
                q.save(p)?;
            }
            match a.format {
                ReportFormat::Json => {
                    writeln!(out, "{}", serde_json::to_string_pretty(&q.to_json())?)?
                }
                _ => {
                    writeln!(out, "states: {}", q.state_count())?;
                    writeln!(out, "entries: {}", q.entry_count())?;
                    writeln!(out, "label mode: {}", q.label_mode())?;
                    writeln!(out, "residual: {:e}", q.residual())?;
                }
            }
            if let Some(w) = epsilon_diagnostic(&lts, q.gamma(), q.epsilon()) {
                writeln!(out, "warning: {w}")?;
            }
            let init = program.initial();
            let ctx = RunContext::start(&program.local_labels(&init), q.label_mode());
            let enabled = program.enabled_events(&init);
            if !enabled.is_empty()
                && compatible_events(&q, &ctx, &ctx.key(&init), &enabled).is_empty()
            {
                return Ok(Outcome::Conflict(
                    "requirements conflict: no enabled event is Q*-compatible at the initial state"
                        .into(),
                ));
            }
            Ok(Outcome::Done)
        }
    }
}
