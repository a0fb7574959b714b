//! Value iteration on the liveness MDP of a small Sokoban board, followed by
//! the Q*-compatible event sets along one sampled run.

use std::sync::Arc;

use bp_liveness::experiment::default_corpus_dir;
use bp_liveness::mdp::{
    compatible_events, RunContext, DEFAULT_EPSILON, DEFAULT_GAMMA, DEFAULT_TOL,
};
use bp_liveness::models::sokoban::{sokoban_from_board, LivenessMode};
use bp_liveness::{
    explore, mdp::DeadEndPolicy, run, value_iteration, ExploreLimits, LabelMode, MdpArbiter,
    MdpModel,
};

fn main() -> bp_liveness::Result<()> {
    let text = std::fs::read_to_string(default_corpus_dir().join("trap-1.txt"))?;
    let program = sokoban_from_board(&text, LivenessMode::AllBoxes)?;
    let lts = explore(&program, ExploreLimits::default())?;
    let q = value_iteration(
        &MdpModel::new(&lts, LabelMode::Single),
        DEFAULT_GAMMA,
        DEFAULT_TOL,
        DEFAULT_EPSILON,
    );
    println!("{} states, residual {:e}", q.state_count(), q.residual());

    let init = program.initial();
    for (e, v) in q.row(&init).unwrap_or(&[]) {
        println!("  Q(init, {e}) = {v:+.4}");
    }

    let trace = run(
        &program,
        &mut MdpArbiter::new(Arc::new(q.clone()), DeadEndPolicy::Report),
        12,
        3,
    );
    let mut ctx = RunContext::start(&trace.labels[0], LabelMode::Single);
    for (t, state) in trace.states.iter().enumerate().take(trace.len()) {
        let enabled = program.enabled_events(state);
        let allowed: Vec<String> = compatible_events(&q, &ctx, &ctx.key(state), &enabled)
            .into_iter()
            .map(|i| enabled[i].to_string())
            .collect();
        println!(
            "step {t:>2}: reward so far {:+}, compatible [{}], took {}",
            trace.cumulative_reward[t],
            allowed.join(" "),
            trace.events[t]
        );
        ctx.advance(&trace.labels[t + 1]);
    }
    Ok(())
}
