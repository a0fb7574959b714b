//! Executing b-programs and recording traces.

use std::fmt;
use std::io::Write;

use rand::SeedableRng;
use serde::Serialize;

use crate::arbiter::{Arbiter, Choice, SeededRng};
use crate::error::{Error, Result};
use crate::event::Event;
use crate::mdp::reward::transition_reward;
use crate::program::{BProgram, CompositeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    Deadlock,
    /// The step budget ran out, or the caller's stop condition fired.
    StepLimit,
    ArbiterStuck,
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminationReason::Deadlock => "deadlock",
            TerminationReason::StepLimit => "step-limit",
            TerminationReason::ArbiterStuck => "arbiter-stuck",
        })
    }
}

/// A finite run prefix.
///
/// `labels[t]` and `cumulative_reward[t]` describe `states[t]`. The reward is
/// the combined-label liveness reward summed from a virtual non-must-finish
/// predecessor of the initial state, so it is `0` or `-1` at every position.
#[derive(Debug, Clone)]
pub struct Trace {
    pub states: Vec<CompositeState>,
    pub events: Vec<Event>,
    pub labels: Vec<Vec<bool>>,
    pub cumulative_reward: Vec<f64>,
    pub terminated: TerminationReason,
    pub message: Option<String>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_state(&self) -> &CompositeState {
        self.states.last().expect("trace has at least one state")
    }

    pub fn last_labels(&self) -> &[bool] {
        self.labels.last().expect("trace has at least one state")
    }

    /// One JSON record per step: state hash, incoming event, labels and reward.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        #[derive(Serialize)]
        struct Record<'a> {
            step: usize,
            state_hash: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            event: Option<&'a Event>,
            labels: Vec<u8>,
            cumulative_reward: f64,
        }
        for (t, state) in self.states.iter().enumerate() {
            let rec = Record {
                step: t,
                state_hash: format!("{:016x}", state.stable_hash()),
                event: t.checked_sub(1).map(|i| &self.events[i]),
                labels: self.labels[t].iter().map(|&b| u8::from(b)).collect(),
                cumulative_reward: self.cumulative_reward[t],
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn combined(labels: &[bool]) -> bool {
    labels.iter().any(|&b| b)
}

/// Runs `program` for at most `max_steps` events.
pub fn run(program: &BProgram, arbiter: &mut impl Arbiter, max_steps: usize, seed: u64) -> Trace {
    run_until(program, arbiter, max_steps, seed, |_| false)
}

/// Like [`run`], but also stops (as a step limit) once `stop` returns true
/// for the trace so far.
pub fn run_until(
    program: &BProgram,
    arbiter: &mut impl Arbiter,
    max_steps: usize,
    seed: u64,
    mut stop: impl FnMut(&Trace) -> bool,
) -> Trace {
    let mut rng = SeededRng::seed_from_u64(seed);
    let init = program.initial();
    let init_labels = program.local_labels(&init);
    let r0 = transition_reward(false, combined(&init_labels));
    let mut trace = Trace {
        states: vec![init],
        events: Vec::new(),
        labels: vec![init_labels],
        cumulative_reward: vec![r0],
        terminated: TerminationReason::StepLimit,
        message: None,
    };
    arbiter.begin(program, &trace.states[0]);
    loop {
        if trace.events.len() >= max_steps || stop(&trace) {
            trace.terminated = TerminationReason::StepLimit;
            return trace;
        }
        let state = trace.states.last().unwrap().clone();
        let point = program.sync_point(&state);
        if point.enabled().is_empty() {
            trace.terminated = TerminationReason::Deadlock;
            return trace;
        }
        let idx = match arbiter.choose(program, &state, &point, &mut rng) {
            Choice::Pick(i) => i,
            Choice::Stuck(msg) => {
                trace.terminated = TerminationReason::ArbiterStuck;
                trace.message = Some(msg);
                return trace;
            }
        };
        let event = point.enabled()[idx].clone();
        let next = point.advance_unchecked(&event);
        let labels = program.local_labels(&next);
        let prev_hot = combined(trace.labels.last().unwrap());
        let reward = trace.cumulative_reward.last().unwrap()
            + transition_reward(prev_hot, combined(&labels));
        arbiter.observe(program, &state, &event, &next);
        trace.events.push(event);
        trace.states.push(next);
        trace.labels.push(labels);
        trace.cumulative_reward.push(reward);
    }
}

/// Liveness of a deadlocked run, read as stuttering forever in its last state.
pub fn is_live_finite(trace: &Trace) -> Result<bool> {
    if trace.terminated != TerminationReason::Deadlock {
        return Err(Error::NotDeadlocked(trace.terminated.to_string()));
    }
    Ok(trace.last_labels().iter().all(|&l| !l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arbiter::RandomArbiter;
    use crate::program::{local, BThreadDef, SyncStatement};

    fn requester(n: i32, hot: bool) -> BProgram {
        let a = Event::new("a");
        let t = BThreadDef::new(
            "req",
            local(&[0]),
            {
                let a = a.clone();
                move |s| {
                    if s[0] < n {
                        SyncStatement::request([a.clone()]).must_finish(hot)
                    } else {
                        SyncStatement::idle()
                    }
                }
            },
            |s, _| local(&[s[0] + 1]),
        );
        BProgram::new(vec![t], [a]).unwrap()
    }

    #[test]
    fn zero_steps_gives_single_state() {
        let p = requester(3, true);
        let t = run(&p, &mut RandomArbiter, 0, 1);
        assert_eq!(t.states.len(), 1);
        assert!(t.events.is_empty());
        assert_eq!(t.terminated, TerminationReason::StepLimit);
        assert!(is_live_finite(&t).is_err());
    }

    #[test]
    fn deadlock_after_requests_is_live() {
        let p = requester(3, true);
        let t = run(&p, &mut RandomArbiter, 100, 1);
        assert_eq!(t.len(), 3);
        assert_eq!(t.terminated, TerminationReason::Deadlock);
        assert!(is_live_finite(&t).unwrap());
        assert_eq!(t.cumulative_reward, vec![-1.0, -1.0, -1.0, 0.0]);
    }

    #[test]
    fn deadlock_in_hot_state_is_not_live() {
        let a = Event::new("a");
        let t = BThreadDef::new(
            "stuck",
            local(&[0]),
            |s| SyncStatement::idle().must_finish(s[0] == 0),
            |s, _| s.clone(),
        );
        let p = BProgram::new(vec![t], [a]).unwrap();
        let tr = run(&p, &mut RandomArbiter, 10, 0);
        assert_eq!(tr.terminated, TerminationReason::Deadlock);
        assert!(!is_live_finite(&tr).unwrap());
    }

    #[test]
    fn jsonl_has_one_record_per_state() {
        let p = requester(2, false);
        let t = run(&p, &mut RandomArbiter, 10, 3);
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let v: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
        assert_eq!(v["event"]["name"], "a");
        assert_eq!(v["labels"], serde_json::json!([0]));
    }
}
