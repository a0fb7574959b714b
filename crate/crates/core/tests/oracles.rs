//! Library results checked against independently written oracles.

mod common;

use std::collections::{HashSet, VecDeque};
use std::hash::Hash;

use bp_liveness::mdp::reward::transition_reward;
use bp_liveness::mdp::DEFAULT_TOL;
use bp_liveness::mdp::{q_learning, QLearningConfig};
use bp_liveness::models::level_crossing::{
    approach_requester, approaching, level_crossing, LevelCrossingConfig, FREIGHT,
};
use bp_liveness::models::sokoban::{sokoban_from_board, LivenessMode};
use bp_liveness::patterns::lasso_is_live;
use bp_liveness::{
    enumerate_lassos, run, solve, to_gba, BProgram, ExploredLts, LabelMode, RandomArbiter,
    WinningSet,
};
use common::*;

fn bfs_count<S: Clone + Eq + Hash>(init: S, next: impl Fn(&S) -> Vec<S>) -> usize {
    let mut seen = HashSet::from([init.clone()]);
    let mut queue = VecDeque::from([init]);
    while let Some(s) = queue.pop_front() {
        for t in next(&s) {
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    seen.len()
}

#[test]
fn level_crossing_counts_match_hand_models() {
    // (1,1,1): two one-shot requesters, no gap constraint: done flags only.
    let lts = lts(&level_crossing(&LevelCrossingConfig::scaled(1, 1, 1)).unwrap());
    assert_eq!(lts.state_count(), 4);

    // (1,1,2): (freight done, maintenance done, freights since maintenance).
    let hand = bfs_count((0, 0, 0), |&(f, m, g)| {
        let mut out = Vec::new();
        if f < 1 && g < 1 {
            out.push((f + 1, m, g + 1));
        }
        if m < 1 {
            out.push((f, m + 1, 0));
        }
        out
    });
    let lts = lts_of(&level_crossing(&LevelCrossingConfig::scaled(1, 1, 2)).unwrap());
    assert_eq!(lts.state_count(), hand);

    // (2,2,2) with two maintenance lines.
    let hand = bfs_count((0, 0, 0, 0), |&(f, m1, m2, g)| {
        let mut out = Vec::new();
        if f < 2 && g < 1 {
            out.push((f + 1, m1, m2, g + 1));
        }
        if m1 < 2 {
            out.push((f, m1 + 1, m2, 0));
        }
        if m2 < 2 {
            out.push((f, m1, m2 + 1, 0));
        }
        out
    });
    let lts = lts_of(&level_crossing(&LevelCrossingConfig::scaled(2, 2, 2)).unwrap());
    assert_eq!(lts.state_count(), hand);
}

fn lts_of(p: &BProgram) -> ExploredLts {
    lts(p)
}

fn grid_successors(g: &Grid) -> Vec<Grid> {
    MOVES.iter().filter_map(|m| g.step(m)).collect()
}

#[test]
fn sokoban_counts_match_grid_search() {
    for name in ["corridor-1", "corridor-2", "trap-1", "room1-1", "room2-1"] {
        let text = board(name);
        let grid = Grid::parse(&text);
        // sorted boxes: identity does not matter for all_boxes
        let anonymous = bfs_count(grid.cells(), |cells| {
            let (p, boxes) = cells;
            let w = grid.width();
            let g = Grid {
                walls: grid.walls.clone(),
                player: (p / w, p % w),
                boxes: boxes.iter().map(|&b| (b / w, b % w)).collect(),
            };
            grid_successors(&g).iter().map(Grid::cells).collect()
        });
        let all = lts(&sokoban_from_board(&text, LivenessMode::AllBoxes).unwrap());
        assert_eq!(all.state_count(), anonymous, "{name} all_boxes");

        let labelled = bfs_count(grid.clone(), grid_successors);
        let per = lts(&sokoban_from_board(&text, LivenessMode::PerBox).unwrap());
        assert_eq!(per.state_count(), labelled, "{name} per_box");
    }
}

#[test]
fn dynamics_track_grid_simulation() {
    let text = board("room1-1");
    let program = sokoban_from_board(&text, LivenessMode::AllBoxes).unwrap();
    let mut state = program.initial();
    let mut grid = Grid::parse(&text);
    let mut x: u64 = 0x9e37_79b9_7f4a_7c15;
    for _ in 0..2000 {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        let legal: Vec<&str> = MOVES
            .iter()
            .copied()
            .filter(|m| grid.step(m).is_some())
            .collect();
        let enabled: Vec<String> = program
            .enabled_events(&state)
            .iter()
            .map(|e| e.name().to_string())
            .collect();
        let mut sorted_legal: Vec<&str> = legal.clone();
        sorted_legal.sort_unstable();
        let mut sorted_enabled: Vec<&str> = enabled.iter().map(String::as_str).collect();
        sorted_enabled.sort_unstable();
        assert_eq!(sorted_legal, sorted_enabled);
        let m = legal[(x % legal.len() as u64) as usize];
        let e = program
            .enabled_events(&state)
            .into_iter()
            .find(|e| e.name() == m)
            .unwrap();
        state = program.step(&state, &e).unwrap();
        grid = grid.step(m).unwrap();
        let (p, boxes) = grid.cells();
        let dynamics = &state.locals()[0];
        assert_eq!(dynamics[0] as usize, p);
        let lib_boxes: Vec<usize> = dynamics[1..].iter().map(|&v| v as usize).collect();
        assert_eq!(lib_boxes, boxes);
    }
}

/// Winning iff some state with every label 0 that lies on a cycle is
/// reachable. Exact for models where one label is the only obligation.
fn winning_oracle(lts: &ExploredLts) -> Vec<bool> {
    let n = lts.state_count();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack: Vec<usize> = lts.edges(s).iter().map(|e| e.target).collect();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(lts.edges(v).iter().map(|e| e.target));
                }
            }
            seen
        })
        .collect();
    let good: Vec<usize> = (0..n).filter(|&s| !lts.is_hot(s) && reach[s][s]).collect();
    (0..n)
        .map(|s| good.iter().any(|&g| g == s || reach[s][g]))
        .collect()
}

fn solved(lts: &ExploredLts) -> WinningSet {
    solve(&to_gba(lts))
}

#[test]
fn winning_sets_match_reachability_oracle() {
    for name in ["corridor-1", "corridor-2", "trap-1", "room1-1"] {
        let lts = lts(&sokoban(name, LivenessMode::AllBoxes));
        assert_eq!(
            solved(&lts).winning(),
            winning_oracle(&lts).as_slice(),
            "{name}"
        );
    }
    let lts = lts(&requester_chain());
    assert_eq!(solved(&lts).winning(), winning_oracle(&lts).as_slice());
}

#[test]
fn trap_board_has_losing_states_but_winning_init() {
    let lts = lts(&sokoban("trap-1", LivenessMode::AllBoxes));
    let ws = solved(&lts);
    assert!(ws.init_winning());
    assert!(ws.winning_count() < lts.state_count());
}

#[test]
fn live_lassos_stay_in_winning_set() {
    for name in ["corridor-1", "trap-1"] {
        let lts = lts(&sokoban(name, LivenessMode::AllBoxes));
        let ws = solved(&lts);
        let mut live = 0;
        for lasso in enumerate_lassos(&lts, 6, 4) {
            if lasso_is_live(&lts, &lasso) {
                live += 1;
                assert!(lasso
                    .stem_states
                    .iter()
                    .chain(&lasso.cycle_states)
                    .all(|&s| ws.is_winning(s)));
            }
        }
        assert!(live > 0, "{name}");
    }
}

#[test]
fn emptiness_matches_lasso_search() {
    let stuck = "#####\n#$ .#\n# @ #\n#####\n";
    for (text, expect) in [(board("corridor-1"), true), (stuck.to_string(), false)] {
        let lts = lts(&sokoban_from_board(&text, LivenessMode::AllBoxes).unwrap());
        let any_live = enumerate_lassos(&lts, 6, 6).any(|l| lasso_is_live(&lts, &l));
        assert_eq!(solved(&lts).init_winning(), any_live);
        assert_eq!(any_live, expect);
    }
}

#[test]
fn bottom_sccs_of_winning_subgraph_are_accepting() {
    for program in [
        sokoban("trap-1", LivenessMode::PerBox),
        level_crossing(&LevelCrossingConfig::scaled(2, 1, 2)).unwrap(),
    ] {
        let lts = lts(&program);
        let ws = solved(&lts);
        let n = lts.state_count();
        let reach = |s: usize| {
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for e in lts.edges(v) {
                    if ws.is_winning(e.target) && !seen[e.target] {
                        seen[e.target] = true;
                        stack.push(e.target);
                    }
                }
            }
            seen
        };
        let mut bottoms = 0;
        for s in (0..n).filter(|&s| ws.is_winning(s)) {
            let from_s = reach(s);
            let members: Vec<usize> = (0..n).filter(|&t| from_s[t]).collect();
            if members.iter().all(|&t| reach(t)[s]) {
                bottoms += 1;
                assert!(ws.sccs()[ws.scc_of(s)].accepting);
                for i in 0..lts.arity() {
                    assert!(members.iter().any(|&t| !lts.labels(t)[i]), "set {i} missed");
                }
            }
        }
        assert!(bottoms > 0);
    }
}

#[test]
fn q_learning_approaches_value_iteration_on_a_chain() {
    let cfg = LevelCrossingConfig::scaled(2, 1, 1);
    let program =
        BProgram::new(vec![approach_requester(FREIGHT, 2, true)], cfg.alphabet()).unwrap();
    let lts = lts(&program);
    assert_eq!(lts.state_count(), 3);
    let exact = exact_q(&lts, LabelMode::Single);
    let learned = q_learning(&program, &QLearningConfig::default());
    let a = approaching(FREIGHT);
    let mut compared = 0;
    for s in lts.states() {
        if let (Some(x), Some(y)) = (exact.get(s, &a), learned.get(s, &a)) {
            assert!((x - y).abs() < 0.05, "{x} vs {y}");
            compared += 1;
        }
    }
    assert_eq!(compared, 2);
}

#[test]
fn bellman_residual_is_within_tolerance() {
    for program in [
        sokoban("room1-1", LivenessMode::AllBoxes),
        requester_chain(),
    ] {
        let lts = lts(&program);
        let q = exact_q(&lts, LabelMode::Single);
        let value = |t: usize| {
            q.row(lts.state(t))
                .unwrap()
                .iter()
                .map(|(_, v)| *v)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut worst: f64 = 0.0;
        for s in 0..lts.state_count() {
            for e in lts.edges(s) {
                let target = transition_reward(lts.is_hot(s), lts.is_hot(e.target))
                    + GAMMA * value(e.target);
                let got = q.get(lts.state(s), lts.event(e.event)).unwrap();
                worst = worst.max((got - target).abs());
            }
        }
        assert!(worst <= 10.0 * DEFAULT_TOL, "residual {worst}");
    }
}

#[test]
fn random_arbiter_leaves_the_winning_set_on_trap_board() {
    let program = sokoban("trap-1", LivenessMode::AllBoxes);
    let lts = lts(&program);
    let ws = solved(&lts);
    let losing_runs = (0..100)
        .filter(|&seed| {
            let t = run(&program, &mut RandomArbiter, 50, seed);
            t.states
                .iter()
                .any(|s| !ws.is_winning(lts.index_of(s).unwrap()))
        })
        .count();
    assert!(losing_runs > 0);
}
