//! Liveness GBA, SCC-based winning-set solver and the winning-set arbiter.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::arbiter::{pick_uniform, Arbiter, Choice, SeededRng};
use crate::error::{Error, Result};
use crate::explorer::ExploredLts;
use crate::graph::tarjan;
use crate::program::{BProgram, CompositeState, SyncPoint};

/// The explored LTS read as a generalized Büchi automaton with one
/// acceptance set per b-thread: `F_i = { s : L_i(s) = 0 }`.
#[derive(Debug, Clone)]
pub struct LivenessGba<'a> {
    lts: &'a ExploredLts,
    acceptance: Vec<Vec<bool>>,
}

impl<'a> LivenessGba<'a> {
    pub fn lts(&self) -> &'a ExploredLts {
        self.lts
    }

    pub fn set_count(&self) -> usize {
        self.acceptance.len()
    }

    /// Membership vector of `F_i`.
    pub fn acceptance_set(&self, i: usize) -> &[bool] {
        &self.acceptance[i]
    }

    pub fn accepts(&self, i: usize, s: usize) -> bool {
        self.acceptance[i][s]
    }
}

pub fn to_gba(lts: &ExploredLts) -> LivenessGba<'_> {
    let acceptance = (0..lts.arity())
        .map(|i| (0..lts.state_count()).map(|s| !lts.labels(s)[i]).collect())
        .collect();
    LivenessGba { lts, acceptance }
}

#[derive(Debug, Clone, Serialize)]
pub struct SccInfo {
    pub id: usize,
    pub size: usize,
    pub nontrivial: bool,
    pub accepting: bool,
    pub winning: bool,
}

/// Solver output. SCC ids are in Tarjan completion order.
#[derive(Debug, Clone)]
pub struct WinningSet {
    winning: Vec<bool>,
    scc_of: Vec<usize>,
    sccs: Vec<SccInfo>,
    thread_ids: Vec<String>,
    /// Per set, whether some reachable nontrivial SCC intersects it.
    set_reachable: Vec<bool>,
}

impl WinningSet {
    pub fn is_winning(&self, s: usize) -> bool {
        self.winning[s]
    }

    pub fn winning(&self) -> &[bool] {
        &self.winning
    }

    pub fn winning_count(&self) -> usize {
        self.winning.iter().filter(|&&w| w).count()
    }

    pub fn init_winning(&self) -> bool {
        self.winning[0]
    }

    pub fn scc_of(&self, s: usize) -> usize {
        self.scc_of[s]
    }

    pub fn sccs(&self) -> &[SccInfo] {
        &self.sccs
    }

    pub fn accepting_sccs(&self) -> Vec<usize> {
        self.sccs
            .iter()
            .filter(|c| c.accepting)
            .map(|c| c.id)
            .collect()
    }

    /// Explanation for an unwinnable initial state, naming the acceptance
    /// sets that cannot be visited infinitely often.
    pub fn unrealizable_reason(&self) -> String {
        let unmet: Vec<String> = self
            .set_reachable
            .iter()
            .zip(&self.thread_ids)
            .filter(|(ok, _)| !**ok)
            .map(|(_, id)| format!("F[{id}]"))
            .collect();
        if unmet.is_empty() {
            let all: Vec<String> = self
                .thread_ids
                .iter()
                .map(|id| format!("F[{id}]"))
                .collect();
            format!(
                "no reachable cycle visits all acceptance sets {} together",
                all.join(", ")
            )
        } else {
            format!(
                "no reachable cycle visits acceptance set(s) {} (b-thread stays in must-finish)",
                unmet.join(", ")
            )
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": "bp-liveness/winning-set/v1",
            "states": self.winning.len(),
            "winning": self.winning_count(),
            "init_winning": self.init_winning(),
            "accepting_sccs": self.accepting_sccs(),
            "sccs": self.sccs,
            "unrealizable_reason": (!self.init_winning()).then(|| self.unrealizable_reason()),
        })
    }

    /// DOT export with winning states green and losing states red.
    pub fn to_dot(&self, lts: &ExploredLts) -> String {
        lts.to_dot_with(|s| {
            let color = if self.winning[s] {
                "#c9f2c7"
            } else {
                "#f4b6b6"
            };
            let border = if lts.is_hot(s) { ", peripheries=2" } else { "" };
            format!("style=filled, fillcolor=\"{color}\"{border}")
        })
    }
}

pub fn solve(gba: &LivenessGba<'_>) -> WinningSet {
    let lts = gba.lts;
    let n = lts.state_count();
    let (comp, count) = tarjan(n, |_| true, |v| lts.edges(v).iter().map(|e| e.target));

    let k = gba.set_count();
    let mut size = vec![0usize; count];
    let mut internal = vec![false; count];
    let mut hits = vec![vec![false; k]; count];
    for v in 0..n {
        let c = comp[v];
        size[c] += 1;
        if lts.edges(v).iter().any(|e| comp[e.target] == c) {
            internal[c] = true;
        }
        for (i, hit) in hits[c].iter_mut().enumerate() {
            *hit |= gba.accepts(i, v);
        }
    }
    let accepting: Vec<bool> = (0..count)
        .map(|c| internal[c] && hits[c].iter().all(|&h| h))
        .collect();

    // backward closure of accepting SCCs
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        for e in lts.edges(v) {
            preds[e.target].push(v);
        }
    }
    let mut winning = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| accepting[comp[v]]).collect();
    for &v in &queue {
        winning[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &u in &preds[v] {
            if !winning[u] {
                winning[u] = true;
                queue.push_back(u);
            }
        }
    }

    // which sets some reachable cycle can visit, for error reporting
    let mut reach = vec![false; n];
    let mut stack = vec![0usize];
    reach[0] = n > 0;
    while let Some(v) = stack.pop() {
        for e in lts.edges(v) {
            if !reach[e.target] {
                reach[e.target] = true;
                stack.push(e.target);
            }
        }
    }
    let mut set_reachable = vec![false; k];
    for c in 0..count {
        if internal[c] && (0..n).any(|v| comp[v] == c && reach[v]) {
            for i in 0..k {
                set_reachable[i] |= hits[c][i];
            }
        }
    }

    let mut comp_winning = vec![false; count];
    for v in 0..n {
        comp_winning[comp[v]] |= winning[v];
    }
    let sccs = (0..count)
        .map(|c| SccInfo {
            id: c,
            size: size[c],
            nontrivial: internal[c],
            accepting: accepting[c],
            winning: comp_winning[c],
        })
        .collect();
    WinningSet {
        winning,
        scc_of: comp,
        sccs,
        thread_ids: lts.thread_ids().to_vec(),
        set_reachable,
    }
}

/// Allows an enabled event iff its successor is winning; picks uniformly.
#[derive(Debug, Clone)]
pub struct GbaArbiter {
    lts: Arc<ExploredLts>,
    winning: Arc<Vec<bool>>,
}

impl GbaArbiter {
    pub fn new(lts: Arc<ExploredLts>, ws: &WinningSet) -> Result<Self> {
        if !ws.init_winning() {
            return Err(Error::Unrealizable(ws.unrealizable_reason()));
        }
        Ok(GbaArbiter {
            lts,
            winning: Arc::new(ws.winning.clone()),
        })
    }

    /// Explores, solves and builds the arbiter in one go.
    pub fn for_program(program: &BProgram, limits: crate::explorer::ExploreLimits) -> Result<Self> {
        let lts = Arc::new(crate::explorer::explore(program, limits)?);
        let ws = solve(&to_gba(&lts));
        Self::new(lts, &ws)
    }

    pub fn lts(&self) -> &ExploredLts {
        &self.lts
    }

    pub fn is_winning(&self, s: &CompositeState) -> bool {
        self.lts.index_of(s).is_some_and(|i| self.winning[i])
    }

    /// Indices (into `point.enabled()`) of events leading to winning states.
    pub fn allowed(&self, state: &CompositeState, point: &SyncPoint<'_>) -> Vec<usize> {
        let Some(i) = self.lts.index_of(state) else {
            return Vec::new();
        };
        point
            .enabled()
            .iter()
            .enumerate()
            .filter(|(_, e)| self.lts.successor(i, e).is_some_and(|t| self.winning[t]))
            .map(|(k, _)| k)
            .collect()
    }
}

impl Arbiter for GbaArbiter {
    fn choose(
        &mut self,
        _program: &BProgram,
        state: &CompositeState,
        point: &SyncPoint<'_>,
        rng: &mut SeededRng,
    ) -> Choice {
        match pick_uniform(&self.allowed(state, point), rng) {
            Some(k) => Choice::Pick(k),
            None => Choice::Stuck("no enabled event keeps the run inside the winning set".into()),
        }
    }
}
