//! Explicit state-space exploration, lassos and hot-lasso search.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::graph::tarjan;
use crate::program::{local, BProgram, CompositeState};

/// Index of an interned event in an [`ExploredLts`].
pub type EventId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub event: EventId,
    pub target: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ExploreLimits {
    pub max_states: usize,
    pub max_transitions: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_states: 1_000_000,
            max_transitions: 10_000_000,
        }
    }
}

/// The reachable labeled transition system of a b-program.
///
/// State 0 is the initial state. Every state has at least one outgoing edge:
/// deadlocks carry a single `STUTTER` self-loop. Edges of each state are in
/// canonical event order.
#[derive(Debug, Clone)]
pub struct ExploredLts {
    states: Vec<CompositeState>,
    index: HashMap<CompositeState, usize>,
    events: Vec<Event>,
    event_ids: HashMap<Event, EventId>,
    edges: Vec<Vec<Edge>>,
    labels: Vec<Vec<bool>>,
    stutter: Vec<bool>,
    thread_ids: Vec<String>,
}

impl ExploredLts {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn transition_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn init(&self) -> usize {
        0
    }

    pub fn states(&self) -> &[CompositeState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &CompositeState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &CompositeState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> &Event {
        &self.events[id]
    }

    pub fn event_id(&self, e: &Event) -> Option<EventId> {
        self.event_ids.get(e).copied()
    }

    pub fn edges(&self, i: usize) -> &[Edge] {
        &self.edges[i]
    }

    pub fn successor(&self, i: usize, e: &Event) -> Option<usize> {
        let id = self.event_id(e)?;
        self.edges[i]
            .iter()
            .find(|x| x.event == id)
            .map(|x| x.target)
    }

    pub fn labels(&self, i: usize) -> &[bool] {
        &self.labels[i]
    }

    /// Number of label components (threads).
    pub fn arity(&self) -> usize {
        self.thread_ids.len()
    }

    pub fn thread_ids(&self) -> &[String] {
        &self.thread_ids
    }

    pub fn is_stutter_state(&self, i: usize) -> bool {
        self.stutter[i]
    }

    pub fn stutter_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.stutter
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i)
    }

    pub fn is_hot(&self, i: usize) -> bool {
        self.labels[i].iter().any(|&l| l)
    }

    /// Renders a lasso as `stem ( loop )^ω`.
    pub fn render_lasso(&self, l: &Lasso) -> String {
        let names = |ids: &[EventId]| {
            ids.iter()
                .map(|&e| self.events[e].to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        if l.stem.is_empty() {
            format!("( {} )^ω", names(&l.cycle))
        } else {
            format!("{} ( {} )^ω", names(&l.stem), names(&l.cycle))
        }
    }

    /// DOT graph; must-finish states are filled and double-circled.
    pub fn to_dot(&self) -> String {
        self.to_dot_with(|i| {
            if self.is_hot(i) {
                "style=filled, fillcolor=\"#f4cccc\", peripheries=2".to_string()
            } else {
                String::new()
            }
        })
    }

    /// DOT graph with caller-supplied extra node attributes.
    pub fn to_dot_with(&self, node_attrs: impl Fn(usize) -> String) -> String {
        let mut out = String::from("digraph lts {\n  node [shape=circle];\n");
        for i in 0..self.states.len() {
            let lv: String = self.labels[i]
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            let extra = node_attrs(i);
            let sep = if extra.is_empty() { "" } else { ", " };
            let _ = writeln!(out, "  s{i} [label=\"{i}\\n[{lv}]\"{sep}{extra}];");
        }
        for (i, es) in self.edges.iter().enumerate() {
            for e in es {
                let name = self.events[e.event].to_string().replace('"', "\\\"");
                let _ = writeln!(out, "  s{i} -> s{} [label=\"{name}\"];", e.target);
            }
        }
        out.push_str("}\n");
        out
    }

    /// Structured dump of states, transitions and labels.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct StateRec<'a> {
            index: usize,
            hash: String,
            locals: &'a CompositeState,
            labels: Vec<u8>,
            stutter: bool,
        }
        #[derive(Serialize)]
        struct EdgeRec<'a> {
            from: usize,
            event: &'a Event,
            to: usize,
        }
        let states: Vec<StateRec<'_>> = (0..self.states.len())
            .map(|i| StateRec {
                index: i,
                hash: format!("{:016x}", self.states[i].stable_hash()),
                locals: &self.states[i],
                labels: self.labels[i].iter().map(|&b| u8::from(b)).collect(),
                stutter: self.stutter[i],
            })
            .collect();
        let transitions: Vec<EdgeRec<'_>> = self
            .edges
            .iter()
            .enumerate()
            .flat_map(|(i, es)| {
                es.iter().map(move |e| EdgeRec {
                    from: i,
                    event: &self.events[e.event],
                    to: e.target,
                })
            })
            .collect();
        serde_json::json!({
            "schema": "bp-liveness/lts/v1",
            "threads": self.thread_ids,
            "init": 0,
            "states": states,
            "transitions": transitions,
        })
    }

    fn intern(&mut self, e: &Event) -> EventId {
        if let Some(&id) = self.event_ids.get(e) {
            return id;
        }
        let id = self.events.len();
        self.events.push(e.clone());
        self.event_ids.insert(e.clone(), id);
        id
    }

    fn empty(thread_ids: Vec<String>) -> Self {
        ExploredLts {
            states: Vec::new(),
            index: HashMap::new(),
            events: Vec::new(),
            event_ids: HashMap::new(),
            edges: Vec::new(),
            labels: Vec::new(),
            stutter: Vec::new(),
            thread_ids,
        }
    }

    fn add_state(&mut self, s: CompositeState, labels: Vec<bool>) -> usize {
        let i = self.states.len();
        self.index.insert(s.clone(), i);
        self.states.push(s);
        self.edges.push(Vec::new());
        self.labels.push(labels);
        self.stutter.push(false);
        i
    }

    /// Injects STUTTER self-loops and sorts edges into canonical event order.
    fn finish(mut self) -> Self {
        let stutter = Event::stutter();
        for i in 0..self.states.len() {
            if self.edges[i].is_empty() {
                let id = self.intern(&stutter);
                self.edges[i].push(Edge {
                    event: id,
                    target: i,
                });
                self.stutter[i] = true;
            }
        }
        let events = &self.events;
        for es in &mut self.edges {
            es.sort_by(|a, b| events[a.event].cmp(&events[b.event]));
        }
        self
    }
}

/// Hand-built transition systems, used for label products and small fixtures.
#[derive(Debug)]
pub struct LtsBuilder {
    lts: ExploredLts,
}

impl LtsBuilder {
    pub fn new(thread_ids: Vec<String>) -> Self {
        LtsBuilder {
            lts: ExploredLts::empty(thread_ids),
        }
    }

    /// A builder whose states are identified by their insertion index.
    pub fn with_arity(n: usize) -> Self {
        Self::new((0..n).map(|i| format!("t{i}")).collect())
    }

    /// Adds a state; the first one added is the initial state.
    pub fn state(&mut self, labels: &[bool]) -> usize {
        let n = self.lts.states.len();
        self.state_with(CompositeState(vec![local(&[n as i32])]), labels)
    }

    pub fn state_with(&mut self, s: CompositeState, labels: &[bool]) -> usize {
        assert_eq!(labels.len(), self.lts.arity(), "label arity mismatch");
        if let Some(i) = self.lts.index_of(&s) {
            return i;
        }
        self.lts.add_state(s, labels.to_vec())
    }

    pub fn lookup(&self, s: &CompositeState) -> Option<usize> {
        self.lts.index_of(s)
    }

    pub fn edge(&mut self, from: usize, event: &Event, to: usize) -> &mut Self {
        let id = self.lts.intern(event);
        let es = &mut self.lts.edges[from];
        if !es.iter().any(|e| e.event == id) {
            es.push(Edge {
                event: id,
                target: to,
            });
        }
        self
    }

    /// Finalizes. Unreachable states are kept; callers build reachable graphs.
    pub fn build(self) -> ExploredLts {
        self.lts.finish()
    }
}

type Successors = Vec<(Event, CompositeState)>;

/// Depth-first exploration from the initial state. States are indexed in
/// first-visit order and successors expanded in canonical event order.
pub fn explore(program: &BProgram, limits: ExploreLimits) -> Result<ExploredLts> {
    let ids = program
        .threads()
        .iter()
        .map(|t| t.id().to_string())
        .collect();
    let mut lts = ExploredLts::empty(ids);
    let init = program.initial();
    let init_labels = program.local_labels(&init);
    lts.add_state(init, init_labels);
    // a b-thread may not tell the two values of the choice bit apart by blocking
    let nd_alphabet: Vec<Event> = program
        .alphabet()
        .iter()
        .filter(|e| e.nd_choice() == Some(false))
        .cloned()
        .collect();
    let has_nd = !nd_alphabet.is_empty();
    let mut transitions = 0usize;

    // frames: (state index, enabled successors, cursor)
    let mut stack: Vec<(usize, Successors, usize)> = Vec::new();
    let expand = |program: &BProgram, s: &CompositeState| -> Result<Successors> {
        let point = program.sync_point(s);
        for (t, st) in program.threads().iter().zip(point.statements()) {
            if let Some(e) = st.request.iter().find(|e| !program.in_alphabet(e)) {
                return Err(Error::OutsideAlphabet {
                    thread: t.id().to_string(),
                    event: e.to_string(),
                });
            }
            if has_nd
                && nd_alphabet
                    .iter()
                    .any(|e| st.block.contains(e) != st.block.contains(&e.with_nd(true)))
            {
                return Err(Error::BlocksOnChoice(t.id().to_string()));
            }
        }
        Ok(point
            .enabled()
            .iter()
            .map(|e| (e.clone(), point.advance_unchecked(e)))
            .collect())
    };
    stack.push((0, expand(program, &lts.states[0])?, 0));

    while let Some(frame) = stack.last_mut() {
        let (from, succs, cursor) = frame;
        if *cursor >= succs.len() {
            stack.pop();
            continue;
        }
        let (event, target) = succs[*cursor].clone();
        *cursor += 1;
        let from = *from;
        transitions += 1;
        if transitions > limits.max_transitions {
            return Err(Error::LimitExceeded {
                states: lts.states.len(),
                transitions,
            });
        }
        let eid = lts.intern(&event);
        let to = match lts.index_of(&target) {
            Some(i) => i,
            None => {
                if lts.states.len() >= limits.max_states {
                    return Err(Error::LimitExceeded {
                        states: lts.states.len() + 1,
                        transitions,
                    });
                }
                let labels = program.local_labels(&target);
                let i = lts.add_state(target.clone(), labels);
                let succ = expand(program, &target)?;
                lts.edges[from].push(Edge {
                    event: eid,
                    target: i,
                });
                stack.push((i, succ, 0));
                continue;
            }
        };
        lts.edges[from].push(Edge {
            event: eid,
            target: to,
        });
    }
    Ok(lts.finish())
}

/// An ultimately periodic path: `stem` from the initial state, then `cycle`
/// repeated forever. `stem_states` has one more entry than `stem`, its last
/// entry being the cycle entry; `cycle_states[k]` is the state after
/// `cycle[k]`, so the last one equals the entry again.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lasso {
    pub stem: Vec<EventId>,
    pub cycle: Vec<EventId>,
    pub stem_states: Vec<usize>,
    pub cycle_states: Vec<usize>,
}

impl Lasso {
    pub fn entry(&self) -> usize {
        *self.stem_states.last().expect("stem_states is never empty")
    }

    pub fn stem_events<'a>(&self, lts: &'a ExploredLts) -> Vec<&'a Event> {
        self.stem.iter().map(|&e| lts.event(e)).collect()
    }

    pub fn cycle_events<'a>(&self, lts: &'a ExploredLts) -> Vec<&'a Event> {
        self.cycle.iter().map(|&e| lts.event(e)).collect()
    }

    /// States of the ω-run at positions `0..stem+cycle`; position `p` for
    /// `p ≥ stem.len() + cycle.len()` repeats with period `cycle.len()`.
    pub fn state_at(&self, p: usize) -> usize {
        if p < self.stem_states.len() {
            self.stem_states[p]
        } else {
            let k = (p - self.stem.len()) % self.cycle.len();
            if k == 0 {
                self.entry()
            } else {
                self.cycle_states[k - 1]
            }
        }
    }

    pub fn event_at(&self, p: usize) -> EventId {
        if p < self.stem.len() {
            self.stem[p]
        } else {
            self.cycle[(p - self.stem.len()) % self.cycle.len()]
        }
    }
}

/// Preorder walk over all paths from `root` of length `≤ max`.
struct PathDfs {
    max: usize,
    started: bool,
    states: Vec<usize>,
    events: Vec<EventId>,
    cursor: Vec<usize>,
}

impl PathDfs {
    fn new(root: usize, max: usize) -> Self {
        PathDfs {
            max,
            started: false,
            states: vec![root],
            events: Vec::new(),
            cursor: Vec::new(),
        }
    }

    fn end(&self) -> usize {
        *self.states.last().unwrap()
    }

    fn push(&mut self, lts: &ExploredLts, from: usize, k: usize) {
        let e = lts.edges(from)[k];
        self.cursor.push(k);
        self.events.push(e.event);
        self.states.push(e.target);
    }

    fn advance(&mut self, lts: &ExploredLts) -> bool {
        if !self.started {
            self.started = true;
            return true;
        }
        if self.events.len() < self.max {
            let s = self.end();
            if !lts.edges(s).is_empty() {
                self.push(lts, s, 0);
                return true;
            }
        }
        while let Some(k) = self.cursor.pop() {
            self.events.pop();
            self.states.pop();
            let parent = self.end();
            if k + 1 < lts.edges(parent).len() {
                self.push(lts, parent, k + 1);
                return true;
            }
        }
        false
    }
}

/// Iterator over every lasso with `|stem| ≤ stem_bound` and
/// `1 ≤ |cycle| ≤ loop_bound`, each exactly once.
pub struct Lassos<'a> {
    lts: &'a ExploredLts,
    loop_bound: usize,
    outer: PathDfs,
    inner: Option<PathDfs>,
}

impl Iterator for Lassos<'_> {
    type Item = Lasso;

    fn next(&mut self) -> Option<Lasso> {
        loop {
            if let Some(inner) = &mut self.inner {
                let entry = self.outer.end();
                while inner.advance(self.lts) {
                    if !inner.events.is_empty() && inner.end() == entry {
                        return Some(Lasso {
                            stem: self.outer.events.clone(),
                            cycle: inner.events.clone(),
                            stem_states: self.outer.states.clone(),
                            cycle_states: inner.states[1..].to_vec(),
                        });
                    }
                }
                self.inner = None;
            }
            if !self.outer.advance(self.lts) {
                return None;
            }
            self.inner = Some(PathDfs::new(self.outer.end(), self.loop_bound));
        }
    }
}

pub fn enumerate_lassos(lts: &ExploredLts, stem_bound: usize, loop_bound: usize) -> Lassos<'_> {
    Lassos {
        lts,
        loop_bound,
        outer: PathDfs::new(lts.init(), stem_bound),
        inner: None,
    }
}

/// Lassos whose cycle stays in must-finish states of thread `thread`.
pub fn find_hot_lassos(lts: &ExploredLts, thread: usize) -> Vec<Lasso> {
    assert!(thread < lts.arity(), "thread index {thread} out of range");
    find_lassos_within(lts, |s| lts.labels(s)[thread])
}

/// Lassos whose every cycle state has some thread in a must-finish state
/// (b-program hot cycles).
pub fn find_program_hot_lassos(lts: &ExploredLts) -> Vec<Lasso> {
    find_lassos_within(lts, |s| lts.is_hot(s))
}

/// One witness per nontrivial SCC of the subgraph induced by `keep`. The stem
/// is a shortest path from the initial state to the SCC; the cycle is a
/// shortest return path to the entry inside the SCC.
pub fn find_lassos_within(lts: &ExploredLts, keep: impl Fn(usize) -> bool) -> Vec<Lasso> {
    let n = lts.state_count();
    let (comp, count) = tarjan(n, &keep, |v| lts.edges(v).iter().map(|e| e.target));
    let mut size = vec![0usize; count];
    let mut self_loop = vec![false; count];
    for v in 0..n {
        if comp[v] == usize::MAX {
            continue;
        }
        size[comp[v]] += 1;
        if lts.edges(v).iter().any(|e| e.target == v) {
            self_loop[comp[v]] = true;
        }
    }
    let nontrivial = |c: usize| size[c] > 1 || self_loop[c];

    // BFS over the whole graph for shortest stems.
    let mut parent: Vec<Option<(usize, EventId)>> = vec![None; n];
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(v) = queue.pop_front() {
        for e in lts.edges(v) {
            if dist[e.target] == usize::MAX {
                dist[e.target] = dist[v] + 1;
                parent[e.target] = Some((v, e.event));
                queue.push_back(e.target);
            }
        }
    }

    let mut entry: Vec<Option<usize>> = vec![None; count];
    for v in 0..n {
        let c = comp[v];
        if c == usize::MAX || !nontrivial(c) || dist[v] == usize::MAX {
            continue;
        }
        match entry[c] {
            Some(u) if dist[u] <= dist[v] => {}
            _ => entry[c] = Some(v),
        }
    }
    let mut entries: Vec<usize> = entry.into_iter().flatten().collect();
    entries.sort_by_key(|&v| (dist[v], v));

    entries
        .into_iter()
        .map(|v| {
            let mut stem = Vec::new();
            let mut stem_states = vec![v];
            let mut cur = v;
            while let Some((p, e)) = parent[cur] {
                stem.push(e);
                stem_states.push(p);
                cur = p;
            }
            stem.reverse();
            stem_states.reverse();
            let (cycle, cycle_states) = shortest_return(lts, v, |u| comp[u] == comp[v]);
            Lasso {
                stem,
                cycle,
                stem_states,
                cycle_states,
            }
        })
        .collect()
}

fn shortest_return(
    lts: &ExploredLts,
    entry: usize,
    inside: impl Fn(usize) -> bool,
) -> (Vec<EventId>, Vec<usize>) {
    if let Some(e) = lts.edges(entry).iter().find(|e| e.target == entry) {
        return (vec![e.event], vec![entry]);
    }
    let mut parent: HashMap<usize, (usize, EventId)> = HashMap::new();
    let mut queue = VecDeque::new();
    for e in lts.edges(entry) {
        if inside(e.target) && !parent.contains_key(&e.target) {
            parent.insert(e.target, (entry, e.event));
            queue.push_back(e.target);
        }
    }
    while let Some(v) = queue.pop_front() {
        for e in lts.edges(v) {
            if e.target == entry {
                let mut events = vec![e.event];
                let mut states = vec![entry];
                let mut cur = v;
                while cur != entry {
                    let (p, ev) = parent[&cur];
                    events.push(ev);
                    states.push(cur);
                    cur = p;
                }
                events.reverse();
                states.reverse();
                return (events, states);
            }
            if inside(e.target) && !parent.contains_key(&e.target) {
                parent.insert(e.target, (v, e.event));
                queue.push_back(e.target);
            }
        }
    }
    unreachable!("entry of a nontrivial SCC lies on a cycle")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{BThreadDef, SyncStatement};

    fn ev(n: &str) -> Event {
        Event::new(n)
    }

    #[test]
    fn empty_program_is_one_stuttering_state() {
        let p = BProgram::new(vec![], []).unwrap();
        let lts = explore(&p, ExploreLimits::default()).unwrap();
        assert_eq!(lts.state_count(), 1);
        assert_eq!(lts.transition_count(), 1);
        assert!(lts.is_stutter_state(0));
        assert!(lts.event(lts.edges(0)[0].event).is_stutter());
    }

    #[test]
    fn limits_are_enforced() {
        let a = ev("a");
        let t = BThreadDef::new(
            "count",
            local(&[0]),
            {
                let a = a.clone();
                move |_| SyncStatement::request([a.clone()])
            },
            |s, _| local(&[s[0] + 1]),
        );
        let p = BProgram::new(vec![t], [a]).unwrap();
        let r = explore(
            &p,
            ExploreLimits {
                max_states: 10,
                max_transitions: 100,
            },
        );
        assert!(matches!(r, Err(Error::LimitExceeded { states: 11, .. })));
    }

    #[test]
    fn requested_event_outside_alphabet_is_reported() {
        let a = ev("a");
        let t = BThreadDef::new(
            "r",
            local(&[0]),
            move |_| SyncStatement::request([a.clone()]),
            |s, _| s.clone(),
        );
        let p = BProgram::new(vec![t], []).unwrap();
        assert!(matches!(
            explore(&p, ExploreLimits::default()),
            Err(Error::OutsideAlphabet { .. })
        ));
    }

    fn two_cycle() -> ExploredLts {
        let mut b = LtsBuilder::with_arity(1);
        let s0 = b.state(&[false]);
        let s1 = b.state(&[true]);
        b.edge(s0, &ev("a"), s1).edge(s1, &ev("b"), s0);
        b.build()
    }

    #[test]
    fn one_state_stutter_has_one_lasso() {
        let mut b = LtsBuilder::with_arity(0);
        b.state(&[]);
        let lts = b.build();
        let all: Vec<_> = enumerate_lassos(&lts, 0, 1).collect();
        assert_eq!(all.len(), 1);
        assert!(all[0].stem.is_empty());
        assert!(lts.event(all[0].cycle[0]).is_stutter());
    }

    #[test]
    fn two_cycle_lassos_at_both_entries() {
        let lts = two_cycle();
        let all: Vec<_> = enumerate_lassos(&lts, 1, 2).collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].entry(), 0);
        assert_eq!(all[1].entry(), 1);
        let set: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        for l in &all {
            assert_eq!(*l.cycle_states.last().unwrap(), l.entry());
        }
    }

    #[test]
    fn hot_lassos_on_self_loop() {
        let mut b = LtsBuilder::with_arity(1);
        let s0 = b.state(&[false]);
        let s1 = b.state(&[true]);
        b.edge(s0, &ev("go"), s1).edge(s1, &ev("spin"), s1);
        let lts = b.build();
        let ls = find_hot_lassos(&lts, 0);
        assert_eq!(ls.len(), 1);
        assert_eq!(lts.render_lasso(&ls[0]), "go ( spin )^ω");
        assert!(find_hot_lassos(&two_cycle(), 0).is_empty());
    }

    #[test]
    fn lasso_positions_wrap_around_cycle() {
        let lts = two_cycle();
        let l = enumerate_lassos(&lts, 1, 2)
            .find(|l| l.stem.len() == 1)
            .unwrap();
        assert_eq!(l.state_at(0), 0);
        assert_eq!(l.state_at(1), 1);
        assert_eq!(l.state_at(2), 0);
        assert_eq!(l.state_at(3), 1);
        assert_eq!(lts.event(l.event_at(3)).name(), "b");
    }
}
