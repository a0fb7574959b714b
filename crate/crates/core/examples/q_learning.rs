//! Model-free path: learn a Q table by repeated execution, without exploring
//! the state space, then execute with the Q*-compatible arbiter and judge each
//! run against the exact winning set.

use std::sync::Arc;

use bp_liveness::experiment::{count_live_runs, default_corpus_dir};
use bp_liveness::mdp::{q_learning, DeadEndPolicy, LabelMode, MdpArbiter, QLearningConfig};
use bp_liveness::models::level_crossing::{level_crossing, LevelCrossingConfig};
use bp_liveness::models::sokoban::{sokoban_from_board, LivenessMode};
use bp_liveness::{explore, solve, to_gba, BProgram, ExploreLimits};

fn evaluate(name: &str, program: &BProgram, cfg: &QLearningConfig) -> bp_liveness::Result<()> {
    let q = Arc::new(q_learning(program, cfg));
    let lts = explore(program, ExploreLimits::default())?;
    let ws = solve(&to_gba(&lts));
    let live = count_live_runs(program, &lts, &ws, 1000, 200, 1, |_| {
        MdpArbiter::new(q.clone(), DeadEndPolicy::Report)
    });
    println!(
        "{name}: {} episodes, {} learned states of {}, live runs {live}/1000",
        cfg.episodes,
        q.state_count(),
        lts.state_count()
    );
    Ok(())
}

fn main() -> bp_liveness::Result<()> {
    let board = std::fs::read_to_string(default_corpus_dir().join("corridor-1.txt"))?;
    evaluate(
        "corridor-1",
        &sokoban_from_board(&board, LivenessMode::AllBoxes)?,
        &QLearningConfig::default(),
    )?;
    evaluate(
        "level crossing (2,1,1)",
        &level_crossing(&LevelCrossingConfig::scaled(2, 1, 1))?,
        &QLearningConfig {
            label_mode: LabelMode::Degeneralized,
            ..QLearningConfig::default()
        },
    )?;
    Ok(())
}
