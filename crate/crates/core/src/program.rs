//! B-threads, b-programs and the synchronization-point step semantics.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::event::{Event, EventSet};

/// Explicit local state of one b-thread.
pub type LocalState = SmallVec<[i32; 6]>;

/// Builds a [`LocalState`] from a slice.
pub fn local(values: &[i32]) -> LocalState {
    SmallVec::from_slice(values)
}

/// What a b-thread declares at a synchronization point.
#[derive(Debug, Clone, Default)]
pub struct SyncStatement {
    pub request: Vec<Event>,
    pub wait_for: EventSet,
    pub block: EventSet,
    pub must_finish: bool,
}

impl SyncStatement {
    /// The statement of a thread that has finished: it requests, waits for and
    /// blocks nothing, and is not must-finish.
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn request(events: impl IntoIterator<Item = Event>) -> Self {
        SyncStatement {
            request: events.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn wait_for(set: impl Into<EventSet>) -> Self {
        SyncStatement {
            wait_for: set.into(),
            ..Self::default()
        }
    }

    pub fn block(set: impl Into<EventSet>) -> Self {
        SyncStatement {
            block: set.into(),
            ..Self::default()
        }
    }

    pub fn and_wait_for(mut self, set: impl Into<EventSet>) -> Self {
        self.wait_for = set.into();
        self
    }

    pub fn and_block(mut self, set: impl Into<EventSet>) -> Self {
        self.block = set.into();
        self
    }

    pub fn must_finish(mut self, flag: bool) -> Self {
        self.must_finish = flag;
        self
    }

    /// True iff selecting `e` resumes the declaring thread.
    pub fn resumes_on(&self, e: &Event) -> bool {
        self.request.contains(e) || self.wait_for.contains(e)
    }
}

type StatementFn = Arc<dyn Fn(&LocalState) -> SyncStatement + Send + Sync>;
type AdvanceFn = Arc<dyn Fn(&LocalState, &Event) -> LocalState + Send + Sync>;

/// A b-thread as an explicit state machine.
///
/// `statement` and `advance` must be pure. `advance` is only called on events
/// that the thread observes (its alphabet filter) and that are requested or
/// waited for in the current statement.
#[derive(Clone)]
pub struct BThreadDef {
    id: String,
    initial: LocalState,
    statement: StatementFn,
    advance: AdvanceFn,
    alphabet: EventSet,
}

impl BThreadDef {
    pub fn new(
        id: impl Into<String>,
        initial: LocalState,
        statement: impl Fn(&LocalState) -> SyncStatement + Send + Sync + 'static,
        advance: impl Fn(&LocalState, &Event) -> LocalState + Send + Sync + 'static,
    ) -> Self {
        BThreadDef {
            id: id.into(),
            initial,
            statement: Arc::new(statement),
            advance: Arc::new(advance),
            alphabet: EventSet::All,
        }
    }

    /// Restricts the events this thread observes.
    pub fn with_alphabet(mut self, alphabet: EventSet) -> Self {
        self.alphabet = alphabet;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn initial(&self) -> &LocalState {
        &self.initial
    }

    pub fn statement(&self, s: &LocalState) -> SyncStatement {
        (self.statement)(s)
    }

    pub fn observes(&self, e: &Event) -> bool {
        self.alphabet.contains(e)
    }

    pub fn advance(&self, s: &LocalState, e: &Event) -> LocalState {
        (self.advance)(s, e)
    }
}

impl fmt::Debug for BThreadDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BThreadDef")
            .field("id", &self.id)
            .field("initial", &self.initial)
            .finish_non_exhaustive()
    }
}

/// Tuple of local states, one per thread in thread order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CompositeState(pub Vec<LocalState>);

impl CompositeState {
    pub fn locals(&self) -> &[LocalState] {
        &self.0
    }

    /// FNV-1a over the local states. Stable across runs and platforms.
    pub fn stable_hash(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |word: u32| {
            for b in word.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for l in &self.0 {
            eat(l.len() as u32);
            for &v in l.iter() {
                eat(v as u32);
            }
        }
        h
    }

    /// Appends an extra component (used by label monitors).
    pub fn extended(&self, extra: LocalState) -> CompositeState {
        let mut v = self.0.clone();
        v.push(extra);
        CompositeState(v)
    }
}

/// A set of b-threads plus the explicit event alphabet.
#[derive(Debug, Clone)]
pub struct BProgram {
    threads: Vec<BThreadDef>,
    alphabet: Vec<Event>,
}

impl BProgram {
    /// Thread ids must be unique. The alphabet is sorted into canonical order.
    pub fn new(
        threads: Vec<BThreadDef>,
        alphabet: impl IntoIterator<Item = Event>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &threads {
            if !seen.insert(t.id.clone()) {
                return Err(Error::DuplicateThread(t.id.clone()));
            }
        }
        let mut alphabet: Vec<Event> = alphabet.into_iter().collect();
        alphabet.sort();
        alphabet.dedup();
        Ok(BProgram { threads, alphabet })
    }

    pub fn threads(&self) -> &[BThreadDef] {
        &self.threads
    }

    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    pub fn thread_index(&self, id: &str) -> Option<usize> {
        self.threads.iter().position(|t| t.id == id)
    }

    pub fn alphabet(&self) -> &[Event] {
        &self.alphabet
    }

    pub fn in_alphabet(&self, e: &Event) -> bool {
        self.alphabet.binary_search(e).is_ok()
    }

    pub fn initial(&self) -> CompositeState {
        CompositeState(self.threads.iter().map(|t| t.initial.clone()).collect())
    }

    /// Collects every thread's statement at `state`.
    pub fn sync_point<'a>(&'a self, state: &'a CompositeState) -> SyncPoint<'a> {
        debug_assert_eq!(state.0.len(), self.threads.len());
        let statements: Vec<SyncStatement> = self
            .threads
            .iter()
            .zip(&state.0)
            .map(|(t, s)| t.statement(s))
            .collect();
        let mut requested: Vec<Event> = statements
            .iter()
            .flat_map(|st| st.request.iter().cloned())
            .collect();
        requested.sort();
        requested.dedup();
        requested.retain(|e| !statements.iter().any(|st| st.block.contains(e)));
        SyncPoint {
            program: self,
            state,
            statements,
            enabled: requested,
        }
    }

    /// Requested and not blocked events, deduplicated, in canonical order.
    pub fn enabled_events(&self, state: &CompositeState) -> Vec<Event> {
        self.sync_point(state).enabled
    }

    pub fn step(&self, state: &CompositeState, event: &Event) -> Result<CompositeState> {
        self.sync_point(state).advance(event)
    }

    /// The must-finish vector `(L_1, …, L_n)` at `state`.
    pub fn local_labels(&self, state: &CompositeState) -> Vec<bool> {
        self.threads
            .iter()
            .zip(&state.0)
            .map(|(t, s)| t.statement(s).must_finish)
            .collect()
    }
}

/// The statements of all threads at one composite state.
pub struct SyncPoint<'a> {
    program: &'a BProgram,
    state: &'a CompositeState,
    statements: Vec<SyncStatement>,
    enabled: Vec<Event>,
}

impl SyncPoint<'_> {
    pub fn enabled(&self) -> &[Event] {
        &self.enabled
    }

    pub fn statements(&self) -> &[SyncStatement] {
        &self.statements
    }

    pub fn labels(&self) -> Vec<bool> {
        self.statements.iter().map(|s| s.must_finish).collect()
    }

    pub fn is_enabled(&self, e: &Event) -> bool {
        self.enabled.binary_search(e).is_ok()
    }

    pub fn is_blocked(&self, e: &Event) -> bool {
        self.statements.iter().any(|st| st.block.contains(e))
    }

    /// Applies `event`, which must be enabled.
    pub fn advance(&self, event: &Event) -> Result<CompositeState> {
        if !self.is_enabled(event) {
            return Err(Error::NotEnabled {
                event: event.to_string(),
            });
        }
        Ok(self.advance_unchecked(event))
    }

    pub(crate) fn advance_unchecked(&self, event: &Event) -> CompositeState {
        let locals = self
            .program
            .threads
            .iter()
            .zip(&self.state.0)
            .zip(&self.statements)
            .map(|((t, s), st)| {
                if t.observes(event) && st.resumes_on(event) {
                    t.advance(s, event)
                } else {
                    s.clone()
                }
            })
            .collect();
        CompositeState(locals)
    }
}
