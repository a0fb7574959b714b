//! Board corpus, backend benchmark and the Q-noise robustness experiment.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::arbiter::{Arbiter, SeededRng};
use crate::error::{Error, Result};
use crate::explorer::{explore, ExploreLimits, ExploredLts};
use crate::gba::{solve, to_gba, WinningSet};
use crate::mdp::{
    perturb_q, value_iteration, DeadEndPolicy, LabelMode, MdpArbiter, MdpModel, DEFAULT_EPSILON,
    DEFAULT_GAMMA, DEFAULT_TOL,
};
use crate::models::sokoban::{parse_board, sokoban_program, LivenessMode};
use crate::program::BProgram;
use crate::trace::{run, TerminationReason, Trace};

#[derive(Debug, Clone)]
pub struct BoardEntry {
    pub name: String,
    pub text: String,
}

impl BoardEntry {
    /// Board names are `<family>-<index>`.
    pub fn family(&self) -> &str {
        family_of(&self.name)
    }
}

pub fn family_of(name: &str) -> &str {
    name.rsplit_once('-').map_or(name, |(f, _)| f)
}

/// The in-repo corpus directory.
pub fn default_corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("boards")
}

/// Every `*.txt` board in `dir`, sorted by name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<BoardEntry>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidConfig(format!("bad board file name {}", path.display())))?
            .to_string();
        out.push(BoardEntry {
            name,
            text: fs::read_to_string(&path)?,
        });
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// Seed of run `idx` in a batch seeded with `seed`: the first word of the
/// ChaCha stream `idx`.
pub fn run_seed(seed: u64, idx: u64) -> u64 {
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng.next_u64()
}

/// A sampled run is live iff the arbiter never got stuck and every visited
/// state lies in the winning set.
pub fn run_is_live(trace: &Trace, lts: &ExploredLts, ws: &WinningSet) -> bool {
    trace.terminated != TerminationReason::ArbiterStuck
        && trace
            .states
            .iter()
            .all(|s| lts.index_of(s).is_some_and(|i| ws.is_winning(i)))
}

/// Number of live runs among `runs` seeded executions; arbiters come from
/// `make(run_index)`.
pub fn count_live_runs<A: Arbiter>(
    program: &BProgram,
    lts: &ExploredLts,
    ws: &WinningSet,
    runs: usize,
    max_steps: usize,
    seed: u64,
    make: impl Fn(u64) -> A + Sync,
) -> usize {
    (0..runs as u64)
        .into_par_iter()
        .filter(|&i| {
            let mut arbiter = make(i);
            let trace = run(program, &mut arbiter, max_steps, run_seed(seed, i));
            run_is_live(&trace, lts, ws)
        })
        .count()
}

fn mdp_mode(mode: LivenessMode) -> LabelMode {
    match mode {
        LivenessMode::AllBoxes => LabelMode::Single,
        LivenessMode::PerBox => LabelMode::Degeneralized,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub board: String,
    pub mode: String,
    pub states: usize,
    pub gba_ms: f64,
    pub mdp_ms: f64,
}

/// Solves every board in both liveness modes with both backends. Times
/// exclude exploration, which the backends share.
pub fn bench(corpus: &[BoardEntry], limits: ExploreLimits) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for b in corpus {
        let board = parse_board(&b.text)?;
        for mode in [LivenessMode::AllBoxes, LivenessMode::PerBox] {
            let lts = explore(&sokoban_program(&board, mode)?, limits)?;
            let t = Instant::now();
            let ws = solve(&to_gba(&lts));
            let gba_ms = t.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(ws.winning_count());
            let t = Instant::now();
            let q = value_iteration(
                &MdpModel::new(&lts, mdp_mode(mode)),
                DEFAULT_GAMMA,
                DEFAULT_TOL,
                DEFAULT_EPSILON,
            );
            let mdp_ms = t.elapsed().as_secs_f64() * 1e3;
            std::hint::black_box(q.entry_count());
            rows.push(BenchRow {
                board: b.name.clone(),
                mode: mode.to_string(),
                states: lts.state_count(),
                gba_ms,
                mdp_ms,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv(rows: &[BenchRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "board,mode,states,gba_ms,mdp_ms")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.3},{:.3}",
            r.board, r.mode, r.states, r.gba_ms, r.mdp_ms
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseConfig {
    pub sigmas: Vec<f64>,
    pub runs: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigmas: vec![0.0, 0.05, 0.1, 0.2, 0.4],
            runs: 1000,
            max_steps: 200,
            seed: 0,
            gamma: DEFAULT_GAMMA,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseRow {
    pub board: String,
    pub sigma: f64,
    pub runs: usize,
    pub live: usize,
    pub rate: f64,
}

/// Live-run rate of the Q*-compatible arbiter on the all-boxes model when
/// each run sees its own `N(0, sigma²)` perturbation of the exact Q table.
/// A run that gets stuck counts as not live.
pub fn noise_experiment(
    board: &BoardEntry,
    cfg: &NoiseConfig,
    limits: ExploreLimits,
) -> Result<Vec<NoiseRow>> {
    let program = sokoban_program(&parse_board(&board.text)?, LivenessMode::AllBoxes)?;
    let lts = explore(&program, limits)?;
    let ws = solve(&to_gba(&lts));
    let q = value_iteration(
        &MdpModel::new(&lts, LabelMode::Single),
        cfg.gamma,
        DEFAULT_TOL,
        cfg.epsilon,
    );
    // Run i uses the same scheduling seed and the same standard-normal draws
    // at every sigma, so the levels are compared on paired samples.
    let noise_seed = run_seed(cfg.seed, u64::MAX);
    let mut rows = Vec::new();
    for &sigma in &cfg.sigmas {
        let live = count_live_runs(
            &program,
            &lts,
            &ws,
            cfg.runs,
            cfg.max_steps,
            cfg.seed,
            |i| {
                let noisy = perturb_q(&q, sigma, run_seed(noise_seed, i));
                MdpArbiter::new(Arc::new(noisy), DeadEndPolicy::Report)
            },
        );
        rows.push(NoiseRow {
            board: board.name.clone(),
            sigma,
            runs: cfg.runs,
            live,
            rate: if cfg.runs == 0 {
                0.0
            } else {
                live as f64 / cfg.runs as f64
            },
        });
    }
    Ok(rows)
}

pub fn write_noise_csv(rows: &[NoiseRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "board,sigma,runs,live,rate")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.4}",
            r.board, r.sigma, r.runs, r.live, r.rate
        )?;
    }
    Ok(())
}
