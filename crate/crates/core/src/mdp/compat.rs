use std::sync::Arc;

use super::monitor::{monitor_step, product_key};
use super::reward::{any, transition_reward};
use super::{LabelMode, QTable};
use crate::arbiter::{pick_uniform, Arbiter, Choice, SeededRng};
use crate::event::Event;
use crate::program::{BProgram, CompositeState, SyncPoint};

/// Running reward state of one execution.
///
/// The sum starts from a virtual non-must-finish predecessor of the initial
/// state, so in the single-label modes it equals `-1` exactly when the
/// current combined label is 1 and `0` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub cumulative_reward: f64,
    /// Per-thread sums (`PerThreadSum` mode only).
    pub per_thread: Vec<f64>,
    /// Monitor counter on entry to the current state (`Degeneralized` only).
    pub counter: usize,
    mode: LabelMode,
    labels: Vec<bool>,
}

impl RunContext {
    pub fn start(labels: &[bool], mode: LabelMode) -> Self {
        let mut ctx = RunContext {
            cumulative_reward: 0.0,
            per_thread: Vec::new(),
            counter: 0,
            mode,
            labels: labels.to_vec(),
        };
        match mode {
            LabelMode::Single | LabelMode::Degeneralized => {
                ctx.cumulative_reward = transition_reward(false, ctx.hot());
            }
            LabelMode::PerThreadSum => {
                ctx.per_thread = labels
                    .iter()
                    .map(|&l| transition_reward(false, l))
                    .collect();
                ctx.cumulative_reward = ctx.per_thread.iter().sum();
            }
        }
        ctx
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    /// Combined label of the current state.
    pub fn hot(&self) -> bool {
        match self.mode {
            LabelMode::Degeneralized => monitor_step(&self.labels, self.counter).0,
            _ => any(&self.labels),
        }
    }

    pub fn advance(&mut self, next_labels: &[bool]) {
        match self.mode {
            LabelMode::Single => {
                self.cumulative_reward += transition_reward(any(&self.labels), any(next_labels));
            }
            LabelMode::Degeneralized => {
                let (prev, c_out) = monitor_step(&self.labels, self.counter);
                let (next, _) = monitor_step(next_labels, c_out);
                self.counter = c_out;
                self.cumulative_reward += transition_reward(prev, next);
            }
            LabelMode::PerThreadSum => {
                for (i, (&a, &b)) in self.labels.iter().zip(next_labels).enumerate() {
                    self.per_thread[i] += transition_reward(a, b);
                }
                self.cumulative_reward = self.per_thread.iter().sum();
            }
        }
        self.labels = next_labels.to_vec();
    }

    /// Key of the current state in a table built for this mode.
    pub fn key(&self, s: &CompositeState) -> CompositeState {
        match self.mode {
            LabelMode::Degeneralized => product_key(s, self.counter),
            _ => s.clone(),
        }
    }
}

fn q_or_zero(q: &QTable, key: &CompositeState, e: &Event) -> f64 {
    q.get(key, e).unwrap_or(0.0)
}

/// Indices of events `e` with `cumulative + q(key, e) > -1 + epsilon`.
pub fn compatible_events(
    q: &QTable,
    ctx: &RunContext,
    key: &CompositeState,
    enabled: &[Event],
) -> Vec<usize> {
    compatible_with_threshold(q, ctx, key, enabled, -1.0)
}

fn compatible_with_threshold(
    q: &QTable,
    ctx: &RunContext,
    key: &CompositeState,
    enabled: &[Event],
    threshold: f64,
) -> Vec<usize> {
    let bound = threshold + q.epsilon();
    enabled
        .iter()
        .enumerate()
        .filter(|(_, e)| ctx.cumulative_reward + q_or_zero(q, key, e) > bound)
        .map(|(i, _)| i)
        .collect()
}

/// Label-only form of the same test for the single-label modes: `q > -1+ε`
/// at non-must-finish states, `q > ε` at must-finish states.
pub fn compatible_by_label(
    q: &QTable,
    hot: bool,
    key: &CompositeState,
    enabled: &[Event],
) -> Vec<usize> {
    let bound = if hot { q.epsilon() } else { -1.0 + q.epsilon() };
    enabled
        .iter()
        .enumerate()
        .filter(|(_, e)| q_or_zero(q, key, e) > bound)
        .map(|(i, _)| i)
        .collect()
}

/// What the compatibility arbiter does when nothing is compatible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeadEndPolicy {
    /// End the trace as arbiter-stuck with a conflict message.
    #[default]
    Report,
    /// End the trace as abandoned; the caller resamples the episode.
    Restart,
}

impl std::str::FromStr for DeadEndPolicy {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "report" => Ok(DeadEndPolicy::Report),
            "restart" => Ok(DeadEndPolicy::Restart),
            _ => Err(crate::error::Error::InvalidConfig(format!(
                "unknown dead-end policy `{s}`"
            ))),
        }
    }
}

/// Message prefix of traces abandoned under [`DeadEndPolicy::Restart`].
pub const ABANDONED: &str = "episode abandoned";

/// Samples uniformly among the compatible events.
#[derive(Debug, Clone)]
pub struct MdpArbiter {
    q: Arc<QTable>,
    policy: DeadEndPolicy,
    threshold: f64,
    ctx: Option<RunContext>,
    dead_ends: usize,
}

impl MdpArbiter {
    pub fn new(q: Arc<QTable>, policy: DeadEndPolicy) -> Self {
        MdpArbiter {
            q,
            policy,
            threshold: -1.0,
            ctx: None,
            dead_ends: 0,
        }
    }

    /// Overrides the `-1` bound (meant for the per-thread-sum heuristic).
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn context(&self) -> Option<&RunContext> {
        self.ctx.as_ref()
    }

    /// Number of dead ends met across all executions of this instance.
    pub fn dead_ends(&self) -> usize {
        self.dead_ends
    }

    pub fn compatible(&self, state: &CompositeState, point: &SyncPoint<'_>) -> Vec<usize> {
        let ctx = self.ctx.as_ref().expect("begin() not called");
        compatible_with_threshold(
            &self.q,
            ctx,
            &ctx.key(state),
            point.enabled(),
            self.threshold,
        )
    }
}

impl Arbiter for MdpArbiter {
    fn begin(&mut self, program: &BProgram, init: &CompositeState) {
        self.ctx = Some(RunContext::start(
            &program.local_labels(init),
            self.q.label_mode(),
        ));
    }

    fn choose(
        &mut self,
        _program: &BProgram,
        state: &CompositeState,
        point: &SyncPoint<'_>,
        rng: &mut SeededRng,
    ) -> Choice {
        match pick_uniform(&self.compatible(state, point), rng) {
            Some(k) => Choice::Pick(k),
            None => {
                self.dead_ends += 1;
                let at = format!("{:016x}", state.stable_hash());
                Choice::Stuck(match self.policy {
                    DeadEndPolicy::Report => format!(
                        "requirements conflict: no enabled event is Q*-compatible at state {at}"
                    ),
                    DeadEndPolicy::Restart => {
                        format!("{ABANDONED}: no compatible event at state {at}")
                    }
                })
            }
        }
    }

    fn observe(
        &mut self,
        program: &BProgram,
        _from: &CompositeState,
        _event: &Event,
        to: &CompositeState,
    ) {
        let labels = program.local_labels(to);
        self.ctx
            .as_mut()
            .expect("begin() not called")
            .advance(&labels);
    }
}

/// Always takes the first maximizing enabled event.
#[derive(Debug, Clone)]
pub struct GreedyArbiter {
    q: Arc<QTable>,
    ctx: Option<RunContext>,
}

impl GreedyArbiter {
    pub fn new(q: Arc<QTable>) -> Self {
        GreedyArbiter { q, ctx: None }
    }
}

impl Arbiter for GreedyArbiter {
    fn begin(&mut self, program: &BProgram, init: &CompositeState) {
        self.ctx = Some(RunContext::start(
            &program.local_labels(init),
            self.q.label_mode(),
        ));
    }

    fn choose(
        &mut self,
        _program: &BProgram,
        state: &CompositeState,
        point: &SyncPoint<'_>,
        _rng: &mut SeededRng,
    ) -> Choice {
        let key = self.ctx.as_ref().expect("begin() not called").key(state);
        let mut best = 0;
        let mut best_q = f64::NEG_INFINITY;
        for (i, e) in point.enabled().iter().enumerate() {
            let v = q_or_zero(&self.q, &key, e);
            if v > best_q {
                best = i;
                best_q = v;
            }
        }
        Choice::Pick(best)
    }

    fn observe(
        &mut self,
        program: &BProgram,
        _from: &CompositeState,
        _event: &Event,
        to: &CompositeState,
    ) {
        let labels = program.local_labels(to);
        self.ctx
            .as_mut()
            .expect("begin() not called")
            .advance(&labels);
    }
}
