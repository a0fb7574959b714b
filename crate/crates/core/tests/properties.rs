//! Property tests over seeded executions.

mod common;

use std::sync::{Arc, LazyLock};

use bp_liveness::mdp::{compatible_by_label, compatible_events, DeadEndPolicy, RunContext};
use bp_liveness::models::level_crossing::{level_crossing, LevelCrossingConfig, PASSENGER};
use bp_liveness::models::sokoban::LivenessMode;
use bp_liveness::verifier::verify_explored;
use bp_liveness::{
    run, solve, to_gba, BProgram, ExploredLts, GbaArbiter, LabelMode, MdpArbiter, QTable,
    RandomArbiter, WinningSet,
};
use common::*;
use proptest::prelude::*;

struct Model {
    program: BProgram,
    lts: Arc<ExploredLts>,
    ws: WinningSet,
    q: Arc<QTable>,
}

impl Model {
    fn new(program: BProgram) -> Model {
        let lts = lts(&program);
        let ws = solve(&to_gba(&lts));
        let q = exact_q(&lts, LabelMode::Single);
        Model {
            program,
            lts: Arc::new(lts),
            ws,
            q: Arc::new(q),
        }
    }

    fn gba(&self) -> GbaArbiter {
        GbaArbiter::new(self.lts.clone(), &self.ws).unwrap()
    }
}

static CROSSING: LazyLock<Model> =
    LazyLock::new(|| Model::new(level_crossing(&LevelCrossingConfig::motivating()).unwrap()));
static TRAP: LazyLock<Model> =
    LazyLock::new(|| Model::new(sokoban("trap-1", LivenessMode::AllBoxes)));
static ROOM: LazyLock<Model> =
    LazyLock::new(|| Model::new(sokoban("room2-1", LivenessMode::PerBox)));

fn models() -> [&'static Model; 3] {
    [&CROSSING, &TRAP, &ROOM]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn same_seed_same_trace(seed in any::<u64>(), m in 0usize..3) {
        let p = &models()[m].program;
        let a = run(p, &mut RandomArbiter, 60, seed);
        let b = run(p, &mut RandomArbiter, 60, seed);
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.states, b.states);
    }

    #[test]
    fn traces_replay_and_labels_agree(seed in any::<u64>(), m in 0usize..3) {
        let p = &models()[m].program;
        let t = run(p, &mut RandomArbiter, 60, seed);
        let mut s = p.initial();
        prop_assert_eq!(&s, &t.states[0]);
        for (e, next) in t.events.iter().zip(&t.states[1..]) {
            prop_assert!(p.enabled_events(&s).contains(e));
            let again = p.step(&s, e).unwrap();
            prop_assert_eq!(&again, &p.step(&s, e).unwrap());
            prop_assert_eq!(&again, next);
            s = again;
        }
        for (state, labels) in t.states.iter().zip(&t.labels) {
            prop_assert_eq!(&p.local_labels(state), labels);
        }
        prop_assert!(trace_prefix_sums_track_labels(&t).is_ok());
    }

    #[test]
    fn only_resumed_threads_move(seed in any::<u64>(), m in 0usize..3) {
        let p = &models()[m].program;
        let t = run(p, &mut RandomArbiter, 60, seed);
        for ((from, to), e) in t.states.iter().zip(&t.states[1..]).zip(&t.events) {
            for (i, th) in p.threads().iter().enumerate() {
                let st = th.statement(&from.locals()[i]);
                let resumed = th.observes(e) && (st.request.contains(e) || st.wait_for.contains(e));
                if !resumed {
                    prop_assert_eq!(&from.locals()[i], &to.locals()[i], "{} moved on {}", th.id(), e);
                }
            }
        }
    }

    #[test]
    fn gba_arbiter_stays_winning(seed in any::<u64>(), m in 0usize..3) {
        let model = models()[m];
        let t = run(&model.program, &mut model.gba(), 120, seed);
        prop_assert!(t.message.is_none());
        for s in &t.states {
            prop_assert!(model.ws.is_winning(model.lts.index_of(s).unwrap()));
        }
    }

    #[test]
    fn label_shortcut_matches_cumulative_test(seed in any::<u64>()) {
        let model = &*TRAP;
        let mut arbiter = MdpArbiter::new(model.q.clone(), DeadEndPolicy::Report);
        let t = run(&model.program, &mut arbiter, 80, seed);
        let mut ctx = RunContext::start(&t.labels[0], LabelMode::Single);
        for (k, s) in t.states.iter().enumerate() {
            let enabled = model.program.enabled_events(s);
            let full = compatible_events(&model.q, &ctx, s, &enabled);
            let short = compatible_by_label(&model.q, t.labels[k].iter().any(|&b| b), s, &enabled);
            prop_assert_eq!(full, short);
            if let Some(next) = t.labels.get(k + 1) {
                ctx.advance(next);
            }
        }
    }

    #[test]
    fn sokoban_moves_keep_the_frame(seed in any::<u64>()) {
        let p = &ROOM.program;
        let t = run(p, &mut RandomArbiter, 80, seed);
        for ((from, to), e) in t.states.iter().zip(&t.states[1..]).zip(&t.events) {
            // per-box monitors keep boxes in identity order
            let a = &from.locals()[1];
            let b = &to.locals()[1];
            prop_assert_eq!(a.len(), b.len());
            let moved: Vec<usize> = (1..a.len()).filter(|&i| a[i] != b[i]).collect();
            prop_assert!(moved.len() <= 1);
            let width = Grid::parse(&board("room2-1")).width() as i32;
            let delta = match e.name() {
                "Up" => -width,
                "Down" => width,
                "Left" => -1,
                "Right" => 1,
                other => panic!("unexpected event {other}"),
            };
            prop_assert_eq!(b[0] - a[0], delta);
            for &i in &moved {
                prop_assert_eq!(b[i] - a[i], delta);
                prop_assert_eq!(a[i], b[0]);
            }
        }
    }

    #[test]
    fn level_crossing_safety_under_random_arbiter(seed in any::<u64>()) {
        let t = run(&CROSSING.program, &mut RandomArbiter, 300, seed);
        let mut down = false;
        let mut phase: std::collections::HashMap<String, u8> = Default::default();
        for e in &t.events {
            match e.name() {
                "Lower" => down = true,
                "Raise" => {
                    prop_assert!(phase.values().all(|&p| p == 0), "raise with a train in the zone");
                    down = false;
                }
                name => {
                    let r = railway_of(e);
                    let p = phase.entry(r.clone()).or_default();
                    match name {
                        "Approaching" => { prop_assert_eq!(*p, 0, "{}", r); *p = 1; }
                        "Entering" => {
                            prop_assert!(down, "{} entered while barriers up", r);
                            prop_assert_eq!(*p, 1, "{}", r);
                            *p = 2;
                        }
                        "Leaving" => { prop_assert_eq!(*p, 2, "{}", r); *p = 0; }
                        other => panic!("unexpected event {other}"),
                    }
                }
            }
        }
    }
}

fn railway_of(e: &bp_liveness::Event) -> String {
    e.attr("railway").unwrap().to_string()
}

#[test]
fn witnesses_replay_with_the_thread_hot_on_the_loop() {
    let model = &*CROSSING;
    let report = verify_explored(&model.program, &model.lts);
    assert!(!report.witnesses.is_empty());
    for w in &report.witnesses {
        let mut s = model.program.initial();
        for e in &w.stem {
            s = model.program.step(&s, e).unwrap();
        }
        let entry = s.clone();
        for e in &w.cycle {
            assert!(
                model.program.local_labels(&s)[w.thread_index],
                "{}",
                w.rendered
            );
            s = model.program.step(&s, e).unwrap();
        }
        assert_eq!(s, entry, "{}", w.rendered);
    }
    let starving = report.primary_witness("requester(Freight)").unwrap();
    assert!(starving.cycle.iter().all(|e| railway_of(e) == PASSENGER));
}
