//! Runs the level crossing with must-finish requesters under three arbiters.
//! The random arbiter may starve the freight train; the GBA and MDP arbiters
//! only pick events from which every requester can still finish.

use std::sync::Arc;

use bp_liveness::mdp::{
    value_iteration, DeadEndPolicy, DEFAULT_EPSILON, DEFAULT_GAMMA, DEFAULT_TOL,
};
use bp_liveness::models::level_crossing::{level_crossing, LevelCrossingConfig};
use bp_liveness::{
    explore, run, Arbiter, ExploreLimits, GbaArbiter, LabelMode, MdpArbiter, MdpModel,
    RandomArbiter, Trace,
};

fn approaches(trace: &Trace) -> String {
    trace
        .events
        .iter()
        .filter(|e| e.name() == "Approaching")
        .map(|e| match e.attr("railway").map(|v| v.to_string()) {
            Some(r) => r[..1].to_string(),
            None => "?".into(),
        })
        .collect()
}

/// Prints one sample and counts, over 500 seeds, runs of 60 steps that end
/// with some requester still unfinished.
fn show(name: &str, program: &bp_liveness::BProgram, arbiter: &mut impl Arbiter) {
    let sample = run(program, arbiter, 60, 7);
    let unfinished = (0..500)
        .filter(|&seed| {
            run(program, arbiter, 60, seed)
                .last_labels()
                .iter()
                .any(|&l| l)
        })
        .count();
    println!(
        "{name:>6}: sample approaches {:<20} unfinished runs {unfinished}/500",
        approaches(&sample)
    );
}

fn main() -> bp_liveness::Result<()> {
    let program = level_crossing(&LevelCrossingConfig::motivating())?;
    let lts = explore(&program, ExploreLimits::default())?;
    println!(
        "{} states, {} transitions",
        lts.state_count(),
        lts.transition_count()
    );

    show("random", &program, &mut RandomArbiter);
    show(
        "gba",
        &program,
        &mut GbaArbiter::for_program(&program, ExploreLimits::default())?,
    );
    let q = value_iteration(
        &MdpModel::new(&lts, LabelMode::Degeneralized),
        DEFAULT_GAMMA,
        DEFAULT_TOL,
        DEFAULT_EPSILON,
    );
    show(
        "mdp",
        &program,
        &mut MdpArbiter::new(Arc::new(q), DeadEndPolicy::Report),
    );
    Ok(())
}
