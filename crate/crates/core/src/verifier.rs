//! Realizability check and hot-lasso counterexamples.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::Result;
use crate::event::Event;
use crate::explorer::{explore, find_hot_lassos, ExploreLimits, ExploredLts, Lasso};
use crate::gba::{solve, to_gba};
use crate::program::BProgram;

/// A lasso along which one thread is must-finish on every cycle state.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub thread: String,
    pub thread_index: usize,
    pub stem: Vec<Event>,
    pub cycle: Vec<Event>,
    /// None of the thread's requested events is enabled anywhere on the cycle.
    pub starved: bool,
    pub rendered: String,
    #[serde(skip)]
    pub lasso: Lasso,
}

/// A reachable deadlock in which some thread is still must-finish.
#[derive(Debug, Clone, Serialize)]
pub struct HotDeadlock {
    pub state: usize,
    pub labels: Vec<bool>,
    pub path: Vec<Event>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub realizable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unrealizable_reason: Option<String>,
    pub states: usize,
    pub transitions: usize,
    pub threads: Vec<String>,
    /// Grouped by thread; within a thread starved witnesses come first, then
    /// shorter stems.
    pub witnesses: Vec<Witness>,
    pub hot_deadlocks: Vec<HotDeadlock>,
}

impl VerificationReport {
    pub fn witnesses_for<'a>(&'a self, thread: &'a str) -> impl Iterator<Item = &'a Witness> + 'a {
        self.witnesses.iter().filter(move |w| w.thread == thread)
    }

    /// Highest-ranked witness for `thread`.
    pub fn primary_witness<'a>(&'a self, thread: &'a str) -> Option<&'a Witness> {
        self.witnesses_for(thread).next()
    }

    pub fn has_counterexample(&self) -> bool {
        !self.witnesses.is_empty() || !self.hot_deadlocks.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["schema"] = "bp-liveness/verification/v1".into();
        v
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

/// Witnesses listed per thread in the text form; JSON carries all of them.
const SHOWN: usize = 3;

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "states: {}, transitions: {}",
            self.states, self.transitions
        )?;
        match &self.unrealizable_reason {
            None => writeln!(f, "realizable: yes")?,
            Some(r) => writeln!(f, "realizable: no ({r})")?,
        }
        for t in &self.threads {
            let ws: Vec<&Witness> = self.witnesses_for(t).collect();
            if ws.is_empty() {
                continue;
            }
            writeln!(f, "hot lassos for {t}: {}", ws.len())?;
            for w in ws.iter().take(SHOWN) {
                let tag = if w.starved { " [starved]" } else { "" };
                writeln!(f, "  {}{tag}", w.rendered)?;
            }
            if ws.len() > SHOWN {
                writeln!(f, "  ... {} more", ws.len() - SHOWN)?;
            }
        }
        for d in &self.hot_deadlocks {
            let path: Vec<&str> = d.path.iter().map(|e| e.name()).collect();
            let hot: Vec<&str> = self
                .threads
                .iter()
                .zip(&d.labels)
                .filter(|(_, &l)| l)
                .map(|(t, _)| t.as_str())
                .collect();
            writeln!(
                f,
                "hot deadlock after [{}]: {}",
                path.join(", "),
                hot.join(", ")
            )?;
        }
        Ok(())
    }
}

pub fn verify(program: &BProgram, limits: ExploreLimits) -> Result<VerificationReport> {
    let lts = explore(program, limits)?;
    Ok(verify_explored(program, &lts))
}

/// Same as [`verify`] on an already explored program.
pub fn verify_explored(program: &BProgram, lts: &ExploredLts) -> VerificationReport {
    let ws = solve(&to_gba(lts));
    let mut witnesses = Vec::new();
    for (i, id) in lts.thread_ids().iter().enumerate() {
        let mut found: Vec<Witness> = find_hot_lassos(lts, i)
            .into_iter()
            .map(|lasso| Witness {
                thread: id.clone(),
                thread_index: i,
                stem: lasso.stem_events(lts).into_iter().cloned().collect(),
                cycle: lasso.cycle_events(lts).into_iter().cloned().collect(),
                starved: starved(program, lts, &lasso, i),
                rendered: lts.render_lasso(&lasso),
                lasso,
            })
            .collect();
        found.sort_by_key(|w| (!w.starved, w.stem.len(), w.cycle.len()));
        witnesses.extend(found);
    }
    VerificationReport {
        realizable: ws.init_winning(),
        unrealizable_reason: (!ws.init_winning()).then(|| ws.unrealizable_reason()),
        states: lts.state_count(),
        transitions: lts.transition_count(),
        threads: lts.thread_ids().to_vec(),
        witnesses,
        hot_deadlocks: hot_deadlocks(lts),
    }
}

fn starved(program: &BProgram, lts: &ExploredLts, lasso: &Lasso, thread: usize) -> bool {
    lasso.cycle_states.iter().all(|&s| {
        if lts.is_stutter_state(s) {
            return true;
        }
        let state = lts.state(s);
        let point = program.sync_point(state);
        let requested = &point.statements()[thread].request;
        !point.enabled().iter().any(|e| requested.contains(e))
    })
}

fn hot_deadlocks(lts: &ExploredLts) -> Vec<HotDeadlock> {
    let n = lts.state_count();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[lts.init()] = true;
    let mut order = Vec::new();
    let mut queue = VecDeque::from([lts.init()]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for e in lts.edges(v) {
            if !seen[e.target] {
                seen[e.target] = true;
                parent[e.target] = Some((v, e.event));
                queue.push_back(e.target);
            }
        }
    }
    order
        .into_iter()
        .filter(|&s| lts.is_stutter_state(s) && lts.is_hot(s))
        .map(|s| {
            let mut path = Vec::new();
            let mut cur = s;
            while let Some((p, e)) = parent[cur] {
                path.push(lts.event(e).clone());
                cur = p;
            }
            path.reverse();
            HotDeadlock {
                state: s,
                labels: lts.labels(s).to_vec(),
                path,
            }
        })
        .collect()
}

/// One line per thread: its primary witness, or that none exists.
pub fn summary(report: &VerificationReport) -> String {
    let mut out = String::new();
    for t in &report.threads {
        match report.primary_witness(t) {
            Some(w) => writeln!(out, "{t}: {}", w.rendered),
            None => writeln!(out, "{t}: no hot lasso"),
        }
        .expect("writing to a String");
    }
    out
}
