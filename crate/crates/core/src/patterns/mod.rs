//! Dwyer liveness patterns as must-finish b-threads, plus the LTL oracle used
//! to check them.

pub mod ltl;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::explorer::{enumerate_lassos, explore, ExploreLimits, ExploredLts, Lasso};
use crate::program::{local, BProgram, BThreadDef, SyncStatement};

pub use ltl::{eval_ltl_on_lasso, eval_on_word, parse as parse_ltl, Formula};

pub const MAX_PROPS: usize = 6;
/// Name shared by all proposition-valued events.
pub const PROP_EVENT: &str = "E";

/// Events are all boolean assignments to `props`, optionally doubled by the
/// non-deterministic choice bit.
#[derive(Debug, Clone)]
pub struct PropositionAlphabet {
    props: Vec<String>,
    include_nd: bool,
}

impl PropositionAlphabet {
    pub fn new(props: &[&str], include_nd: bool) -> Result<Self> {
        if props.len() > MAX_PROPS {
            return Err(Error::InvalidConfig(format!(
                "at most {MAX_PROPS} propositions, got {}",
                props.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for p in props {
            if !seen.insert(*p) {
                return Err(Error::InvalidConfig(format!("duplicate proposition `{p}`")));
            }
        }
        Ok(PropositionAlphabet {
            props: props.iter().map(|p| p.to_string()).collect(),
            include_nd,
        })
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn include_nd(&self) -> bool {
        self.include_nd
    }

    pub fn events(&self) -> Vec<Event> {
        let k = self.props.len();
        let mut out = Vec::with_capacity((1 << k) * if self.include_nd { 2 } else { 1 });
        for bits in 0..(1u32 << k) {
            let e = Event::with_attrs(
                PROP_EVENT,
                self.props
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (p.clone(), bits >> i & 1 == 1)),
            );
            if self.include_nd {
                out.push(e.with_nd(false));
                out.push(e.with_nd(true));
            } else {
                out.push(e);
            }
        }
        out.sort();
        out
    }

    fn check(&self, names: &[&str]) -> Result<()> {
        for n in names {
            if !self.props.iter().any(|p| p == n) {
                return Err(Error::InvalidConfig(format!("unknown proposition `{n}`")));
            }
        }
        Ok(())
    }
}

fn prop(p: &str) -> EventSet {
    EventSet::prop(p)
}

/// "p occurs after q": wait for `q ∧ ¬p`, then must-finish until `p`.
pub fn existence_after(alphabet: &PropositionAlphabet, p: &str, q: &str) -> Result<BThreadDef> {
    alphabet.check(&[p, q])?;
    let trigger = prop(q).and(prop(p).not());
    let target = prop(p);
    Ok(BThreadDef::new(
        format!("existence_after({p},{q})"),
        local(&[0]),
        move |s| match s[0] {
            0 => SyncStatement::wait_for(trigger.clone()),
            1 => SyncStatement::wait_for(target.clone()).must_finish(true),
            _ => SyncStatement::idle(),
        },
        |s, _| local(&[s[0] + 1]),
    ))
}

/// "s responds to p, after q until r".
///
/// States: 0 waits for `q ∧ ¬r`; 1 waits for `r ∨ (p ∧ ¬s)`; 2 waits for `s`
/// with `r` blocked and must-finish.
pub fn response_after_until(
    alphabet: &PropositionAlphabet,
    p: &str,
    s: &str,
    q: &str,
    r: &str,
) -> Result<BThreadDef> {
    alphabet.check(&[p, s, q, r])?;
    let names = [p, s, q, r];
    for (i, a) in names.iter().enumerate() {
        if names[i + 1..].contains(a) {
            return Err(Error::InvalidConfig(format!(
                "proposition `{a}` used twice"
            )));
        }
    }
    let start = prop(q).and(prop(r).not());
    let watch = prop(r).or(prop(p).and(prop(s).not()));
    let respond = prop(s);
    let release = prop(r);
    let (ps, ss, rs) = (p.to_string(), s.to_string(), r.to_string());
    Ok(BThreadDef::new(
        format!("response_after_until({p},{s},{q},{r})"),
        local(&[0]),
        move |st| match st[0] {
            0 => SyncStatement::wait_for(start.clone()),
            1 => SyncStatement::wait_for(watch.clone()),
            _ => SyncStatement::wait_for(respond.clone())
                .and_block(release.clone())
                .must_finish(true),
        },
        move |st, e| {
            let next = match st[0] {
                0 if e.prop(&ps) && !e.prop(&ss) => 2,
                0 => 1,
                1 if e.prop(&rs) => 0,
                1 => 2,
                _ => 1,
            };
            local(&[next])
        },
    ))
}

/// "eventually always p": must-finish loop on every event until an event with
/// choice bit `true`, then `¬p` is blocked forever.
pub fn eventually_always(alphabet: &PropositionAlphabet, p: &str) -> Result<BThreadDef> {
    alphabet.check(&[p])?;
    if !alphabet.include_nd {
        return Err(Error::NondeterminismDisabled);
    }
    let not_p = prop(p).not();
    Ok(BThreadDef::new(
        format!("eventually_always({p})"),
        local(&[0]),
        move |s| match s[0] {
            0 => SyncStatement::wait_for(EventSet::All).must_finish(true),
            _ => SyncStatement::block(not_p.clone()),
        },
        |s, e| {
            local(&[if s[0] == 0 && e.nd_choice() == Some(true) {
                1
            } else {
                s[0]
            }])
        },
    ))
}

/// Requests every alphabet event forever; never blocks, never must-finish.
pub fn all_events_driver(alphabet: &[Event]) -> BThreadDef {
    let all = alphabet.to_vec();
    BThreadDef::new(
        "driver",
        local(&[0]),
        move |_| SyncStatement::request(all.iter().cloned()),
        |s, _| s.clone(),
    )
}

/// Driver plus one pattern thread over the alphabet's events.
pub fn with_driver(alphabet: &PropositionAlphabet, pattern: BThreadDef) -> Result<BProgram> {
    let events = alphabet.events();
    BProgram::new(vec![all_events_driver(&events), pattern], events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    ExistenceAfter,
    ResponseAfterUntil,
    EventuallyAlways,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [
        PatternKind::ExistenceAfter,
        PatternKind::ResponseAfterUntil,
        PatternKind::EventuallyAlways,
    ];

    /// LTL formula the thread is meant to enforce, over the props of
    /// [`PatternKind::alphabet`].
    pub fn formula(self) -> &'static str {
        match self {
            // the thread triggers on q ∧ ¬p and needs a strictly later p
            PatternKind::ExistenceAfter => "G !(q & !p) | F (q & !p & X F p)",
            PatternKind::ResponseAfterUntil => "G ((q & !r) -> ((p -> (!r U (s & !r))) W r))",
            PatternKind::EventuallyAlways => "F G p",
        }
    }

    pub fn alphabet(self) -> PropositionAlphabet {
        match self {
            PatternKind::ExistenceAfter => PropositionAlphabet::new(&["p", "q"], false),
            PatternKind::ResponseAfterUntil => {
                PropositionAlphabet::new(&["p", "q", "r", "s"], false)
            }
            PatternKind::EventuallyAlways => PropositionAlphabet::new(&["p"], true),
        }
        .expect("fixed alphabets are valid")
    }

    pub fn thread(self, alphabet: &PropositionAlphabet) -> Result<BThreadDef> {
        match self {
            PatternKind::ExistenceAfter => existence_after(alphabet, "p", "q"),
            PatternKind::ResponseAfterUntil => response_after_until(alphabet, "p", "s", "q", "r"),
            PatternKind::EventuallyAlways => eventually_always(alphabet, "p"),
        }
    }

    /// Default lasso bounds `(stem, loop)` for the oracle check.
    pub fn default_bounds(self) -> (usize, usize) {
        match self {
            PatternKind::ResponseAfterUntil => (2, 3),
            _ => (5, 5),
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::ExistenceAfter => "existence_after",
            PatternKind::ResponseAfterUntil => "response_after_until",
            PatternKind::EventuallyAlways => "eventually_always",
        })
    }
}

/// Outcome of comparing lasso liveness with the LTL oracle.
#[derive(Debug, Clone, Serialize)]
pub struct PatternCheck {
    pub pattern: PatternKind,
    pub formula: String,
    pub stem_bound: usize,
    pub loop_bound: usize,
    pub states: usize,
    pub lassos: usize,
    pub live: usize,
    pub disagreements: Vec<String>,
}

impl PatternCheck {
    pub fn agrees(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Liveness of a lasso: every thread is non-must-finish somewhere on
/// the cycle.
pub fn lasso_is_live(lts: &ExploredLts, lasso: &Lasso) -> bool {
    (0..lts.arity()).all(|t| lasso.cycle_states.iter().any(|&s| !lts.labels(s)[t]))
}

/// Enumerates every lasso within bounds of driver + pattern and compares
/// liveness with the pattern's formula. For the non-deterministic pattern
/// the choice bit is projected away and liveness is existential over all
/// placements of the first `true` choice.
pub fn check_pattern(
    kind: PatternKind,
    stem_bound: usize,
    loop_bound: usize,
) -> Result<PatternCheck> {
    let alphabet = kind.alphabet();
    let program = with_driver(&alphabet, kind.thread(&alphabet)?)?;
    let lts = explore(&program, ExploreLimits::default())?;
    let formula = ltl::parse(kind.formula())?;
    let mut report = PatternCheck {
        pattern: kind,
        formula: kind.formula().to_string(),
        stem_bound,
        loop_bound,
        states: lts.state_count(),
        lassos: 0,
        live: 0,
        disagreements: Vec::new(),
    };
    for lasso in enumerate_lassos(&lts, stem_bound, loop_bound) {
        report.lassos += 1;
        let (live, truth) = if alphabet.include_nd() {
            let word: Vec<Event> = lasso
                .stem
                .iter()
                .chain(&lasso.cycle)
                .map(|&e| lts.event(e).without_nd())
                .collect();
            let refs: Vec<&Event> = word.iter().collect();
            (
                exists_live_resolution(&program, &word, lasso.stem.len()),
                eval_on_word(&formula, &refs, lasso.stem.len()),
            )
        } else {
            (
                lasso_is_live(&lts, &lasso),
                eval_ltl_on_lasso(&formula, &lasso, &lts),
            )
        };
        report.live += usize::from(live);
        if live != truth && report.disagreements.len() < 20 {
            report.disagreements.push(format!(
                "{}: live={live} formula={truth}",
                lts.render_lasso(&lasso)
            ));
        }
    }
    Ok(report)
}

/// Whether some assignment of choice bits to the periodic word `word` (with
/// loop starting at `loop_start`) is a run of `program` that ends up with all
/// labels 0 forever. The pattern threads only ever react to the first `true`
/// choice, so it suffices to try "never" and each single position.
fn exists_live_resolution(program: &BProgram, word: &[Event], loop_start: usize) -> bool {
    let n = word.len();
    let period = n - loop_start;
    let horizon = n + period;
    let letter = |i: usize| {
        if i < n {
            &word[i]
        } else {
            &word[loop_start + (i - n) % period]
        }
    };
    (0..n).any(|j| {
        let mut s = program.initial();
        for i in 0..horizon {
            let e = letter(i).with_nd(i == j);
            match program.step(&s, &e) {
                Ok(next) => s = next,
                Err(_) => return false,
            }
        }
        // from here the remaining word repeats one full period already replayed
        let labels = program.local_labels(&s);
        labels.iter().all(|&l| !l)
    })
}
