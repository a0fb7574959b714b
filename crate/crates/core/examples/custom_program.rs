//! A hand-written b-program: a producer must eventually emit `done` after
//! each `work`, a gate blocks `done` until `check` happened, and a ticker
//! requests `tick` forever. Shows
//! exploration, DOT export, bounded lassos and the difference between the
//! random and the winning-set arbiter.

use bp_liveness::{
    enumerate_lassos, explore, find_hot_lassos, local, run, BProgram, BThreadDef, Event, EventSet,
    ExploreLimits, GbaArbiter, RandomArbiter, SyncStatement,
};

fn main() -> bp_liveness::Result<()> {
    let [work, check, done, tick] = ["work", "check", "done", "tick"].map(Event::new);

    let producer = BThreadDef::new(
        "producer",
        local(&[0]),
        {
            let (work, done) = (work.clone(), done.clone());
            move |s| match s[0] {
                0 => SyncStatement::request([work.clone()]),
                _ => SyncStatement::request([done.clone()]).must_finish(true),
            }
        },
        |s, e| match e.name() {
            "work" => local(&[1]),
            "done" => local(&[0]),
            _ => s.clone(),
        },
    );
    let gate = BThreadDef::new(
        "gate",
        local(&[0]),
        {
            let check = check.clone();
            move |s| match s[0] {
                0 => SyncStatement::request([check.clone()]).and_block(EventSet::named("done")),
                _ => SyncStatement::wait_for(EventSet::named("done")),
            }
        },
        |s, e| match e.name() {
            "check" => local(&[1]),
            "done" => local(&[0]),
            _ => s.clone(),
        },
    );
    let ticker = BThreadDef::new(
        "ticker",
        local(&[0]),
        {
            let tick = tick.clone();
            move |_| SyncStatement::request([tick.clone()])
        },
        |s, _| s.clone(),
    );
    let program = BProgram::new(vec![producer, gate, ticker], [work, check, done, tick])?;

    let lts = explore(&program, ExploreLimits::default())?;
    println!(
        "{} states, {} transitions",
        lts.state_count(),
        lts.transition_count()
    );
    print!("{}", lts.to_dot());
    println!(
        "lassos with stem <= 2, loop <= 3: {}",
        enumerate_lassos(&lts, 2, 3).count()
    );
    for l in find_hot_lassos(&lts, 0) {
        println!("producer stays unfinished on: {}", lts.render_lasso(&l));
    }

    let names = |t: &bp_liveness::Trace| {
        t.events
            .iter()
            .map(|e| e.name().to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!(
        "random: {}",
        names(&run(&program, &mut RandomArbiter, 8, 4))
    );
    let mut gba = GbaArbiter::for_program(&program, ExploreLimits::default())?;
    println!("gba:    {}", names(&run(&program, &mut gba, 8, 4)));
    Ok(())
}
