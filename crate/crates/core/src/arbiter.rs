//! The event-arbiter interface and the baseline uniform arbiter.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::event::Event;
use crate::program::{BProgram, CompositeState, SyncPoint};

/// RNG type shared by every seeded component.
pub type SeededRng = ChaCha8Rng;

/// Outcome of one arbitration.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    /// Index into the enabled-event slice.
    Pick(usize),
    /// The arbiter declines every enabled event.
    Stuck(String),
}

/// Chooses one enabled event per synchronization point.
///
/// Arbiters are stateful per execution: `begin` is called once before the
/// first choice and `observe` after every transition taken.
pub trait Arbiter {
    fn begin(&mut self, _program: &BProgram, _init: &CompositeState) {}

    fn choose(
        &mut self,
        program: &BProgram,
        state: &CompositeState,
        point: &SyncPoint<'_>,
        rng: &mut SeededRng,
    ) -> Choice;

    fn observe(
        &mut self,
        _program: &BProgram,
        _from: &CompositeState,
        _event: &Event,
        _to: &CompositeState,
    ) {
    }
}

impl<A: Arbiter + ?Sized> Arbiter for Box<A> {
    fn begin(&mut self, program: &BProgram, init: &CompositeState) {
        (**self).begin(program, init)
    }

    fn choose(
        &mut self,
        program: &BProgram,
        state: &CompositeState,
        point: &SyncPoint<'_>,
        rng: &mut SeededRng,
    ) -> Choice {
        (**self).choose(program, state, point, rng)
    }

    fn observe(
        &mut self,
        program: &BProgram,
        from: &CompositeState,
        event: &Event,
        to: &CompositeState,
    ) {
        (**self).observe(program, from, event, to)
    }
}

/// Uniform choice among all enabled events (the classic BP semantics).
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomArbiter;

impl Arbiter for RandomArbiter {
    fn choose(
        &mut self,
        _program: &BProgram,
        _state: &CompositeState,
        point: &SyncPoint<'_>,
        rng: &mut SeededRng,
    ) -> Choice {
        Choice::Pick(rng.random_range(0..point.enabled().len()))
    }
}

/// Uniform pick among `candidates` (indices into the enabled slice).
pub(crate) fn pick_uniform(candidates: &[usize], rng: &mut SeededRng) -> Option<usize> {
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.random_range(0..candidates.len())])
    }
}
