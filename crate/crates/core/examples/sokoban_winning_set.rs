//! Solves the liveness game on a Sokoban board with a corner trap and shows
//! which first moves keep the box deliverable.

use bp_liveness::experiment::default_corpus_dir;
use bp_liveness::models::sokoban::{parse_board, sokoban_program, LivenessMode, Move};
use bp_liveness::{explore, solve, to_gba, ExploreLimits};

fn main() -> bp_liveness::Result<()> {
    let text = std::fs::read_to_string(default_corpus_dir().join("trap-1.txt"))?;
    let board = parse_board(&text)?;
    print!("{board}");

    let lts = explore(
        &sokoban_program(&board, LivenessMode::AllBoxes)?,
        ExploreLimits::default(),
    )?;
    let ws = solve(&to_gba(&lts));
    println!(
        "{} states, {} winning, {} accepting SCCs, initial state winning: {}",
        lts.state_count(),
        ws.winning_count(),
        ws.accepting_sccs().len(),
        ws.init_winning()
    );
    for m in Move::ALL {
        if let Some(t) = lts.successor(lts.init(), &m.event()) {
            let verdict = if ws.is_winning(t) {
                "winning"
            } else {
                "losing"
            };
            println!("  {:<5} -> {verdict}", m.name());
        }
    }
    // the winning-set DOT colours winning states green and losing states red
    let dot = ws.to_dot(&lts);
    println!("DOT export: {} lines", dot.lines().count());
    Ok(())
}
