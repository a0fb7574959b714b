//! Liveness MDP, value iteration, the compatibility arbiter and tabular
//! Q-learning.

pub mod monitor;
pub mod reward;

mod compat;
mod qlearn;
mod qtable;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::explorer::ExploredLts;

pub use compat::{
    compatible_by_label, compatible_events, DeadEndPolicy, GreedyArbiter, MdpArbiter, RunContext,
    ABANDONED,
};
pub use monitor::{degeneralize_labels, monitor_step};
pub use qlearn::{q_learning, QLearningConfig};
pub use qtable::{perturb_q, QTable};
pub use reward::{mode_reward, transition_reward};

pub const DEFAULT_GAMMA: f64 = 0.95;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// How the per-thread must-finish labels become rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// One label: some thread is must-finish.
    #[default]
    Single,
    /// One label from the counter-monitor product.
    Degeneralized,
    /// Sum of per-thread rewards. Heuristic: no correctness guarantee.
    PerThreadSum,
}

impl LabelMode {
    pub fn is_heuristic(self) -> bool {
        self == LabelMode::PerThreadSum
    }
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Single => "single",
            LabelMode::Degeneralized => "degeneralized",
            LabelMode::PerThreadSum => "per_thread_sum",
        })
    }
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.replace('-', "_").as_str() {
            "single" => Ok(LabelMode::Single),
            "degeneralized" => Ok(LabelMode::Degeneralized),
            "per_thread_sum" => Ok(LabelMode::PerThreadSum),
            _ => Err(Error::InvalidConfig(format!("unknown label mode `{s}`"))),
        }
    }
}

/// The explored LTS with deterministic transitions and liveness rewards.
/// In degeneralized mode the carrier is the monitor product.
#[derive(Debug, Clone)]
pub struct MdpModel<'a> {
    base: &'a ExploredLts,
    product: Option<ExploredLts>,
    mode: LabelMode,
}

impl<'a> MdpModel<'a> {
    pub fn new(lts: &'a ExploredLts, mode: LabelMode) -> Self {
        let product = (mode == LabelMode::Degeneralized).then(|| degeneralize_labels(lts));
        MdpModel {
            base: lts,
            product,
            mode,
        }
    }

    pub fn mode(&self) -> LabelMode {
        self.mode
    }

    pub fn base(&self) -> &'a ExploredLts {
        self.base
    }

    pub fn carrier(&self) -> &ExploredLts {
        self.product.as_ref().unwrap_or(self.base)
    }

    /// Reward of the transition `s → t` in the carrier.
    pub fn reward(&self, s: usize, t: usize) -> f64 {
        let c = self.carrier();
        mode_reward(c.labels(s), c.labels(t), self.mode)
    }

    /// Combined label of carrier state `s` (any label set).
    pub fn is_hot(&self, s: usize) -> bool {
        self.carrier().is_hot(s)
    }
}

/// Jacobi value iteration to a sup-norm update below `tol`.
///
/// Sweeps run in parallel; each sweep reads only the previous vector, so the
/// result does not depend on scheduling.
pub fn value_iteration(mdp: &MdpModel<'_>, gamma: f64, tol: f64, epsilon: f64) -> QTable {
    assert!(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0,1)");
    assert!(tol > 0.0, "tol must be positive");
    let lts = mdp.carrier();
    let n = lts.state_count();
    let rewards: Vec<Vec<f64>> = (0..n)
        .map(|s| {
            lts.edges(s)
                .iter()
                .map(|e| mdp.reward(s, e.target))
                .collect()
        })
        .collect();
    let mut v = vec![0.0f64; n];
    let mut residual;
    loop {
        let next: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|s| {
                lts.edges(s)
                    .iter()
                    .zip(&rewards[s])
                    .map(|(e, r)| r + gamma * v[e.target])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        residual = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if residual < tol {
            break;
        }
    }
    let rows = (0..n)
        .map(|s| {
            lts.edges(s)
                .iter()
                .zip(&rewards[s])
                .map(|(e, r)| (lts.event(e.event).clone(), r + gamma * v[e.target]))
                .collect()
        })
        .collect();
    QTable::from_rows(
        lts.states().to_vec(),
        rows,
        gamma,
        epsilon,
        mdp.mode,
        residual,
    )
}

/// Largest shortest-path distance from the initial state.
pub fn diameter_from_init(lts: &ExploredLts) -> usize {
    let mut dist = vec![usize::MAX; lts.state_count()];
    dist[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    let mut max = 0;
    while let Some(v) = queue.pop_front() {
        max = max.max(dist[v]);
        for e in lts.edges(v) {
            if dist[e.target] == usize::MAX {
                dist[e.target] = dist[v] + 1;
                queue.push_back(e.target);
            }
        }
    }
    max
}

/// Warns when `γ^D ≤ 10ε` for the explored depth `D`: goal rewards that far
/// away are then too small to separate from the strict-inequality tolerance.
pub fn epsilon_diagnostic(lts: &ExploredLts, gamma: f64, epsilon: f64) -> Option<String> {
    let d = diameter_from_init(lts);
    let g = gamma.powi(d as i32);
    (g <= 10.0 * epsilon).then(|| {
        format!("gamma^D = {g:.3e} <= 10*epsilon for explored depth D = {d}; raise gamma or lower epsilon")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Event;
    use crate::explorer::LtsBuilder;

    fn chain() -> ExploredLts {
        let mut b = LtsBuilder::with_arity(1);
        let s0 = b.state(&[false]);
        let s1 = b.state(&[true]);
        let s2 = b.state(&[false]);
        b.edge(s0, &Event::new("a"), s1)
            .edge(s1, &Event::new("b"), s2);
        b.build()
    }

    #[test]
    fn chain_matches_closed_form() {
        let lts = chain();
        let q = value_iteration(&MdpModel::new(&lts, LabelMode::Single), 0.95, 1e-12, 1e-6);
        let a = Event::new("a");
        let b = Event::new("b");
        assert!((q.get(lts.state(1), &b).unwrap() - 1.0).abs() < 1e-9);
        assert!((q.get(lts.state(0), &a).unwrap() - (0.95 - 1.0)).abs() < 1e-9);
        assert!(q.get(lts.state(2), &Event::stutter()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn losing_branch_is_minus_one() {
        let mut b = LtsBuilder::with_arity(1);
        let s = b.state(&[false]);
        let trap = b.state(&[true]);
        let good = b.state(&[false]);
        b.edge(s, &Event::new("trap"), trap)
            .edge(s, &Event::new("ok"), good);
        let lts = b.build();
        let q = value_iteration(&MdpModel::new(&lts, LabelMode::Single), 0.95, 1e-12, 1e-6);
        assert!((q.get(lts.state(s), &Event::new("trap")).unwrap() + 1.0).abs() < 1e-9);
        assert!(q.get(lts.state(s), &Event::new("ok")).unwrap().abs() < 1e-9);
        assert_eq!(q.greedy(lts.state(s)).unwrap().name(), "ok");
    }

    #[test]
    fn label_mode_parses() {
        assert_eq!(
            "per-thread-sum".parse::<LabelMode>().unwrap(),
            LabelMode::PerThreadSum
        );
        assert!("bogus".parse::<LabelMode>().is_err());
        assert_eq!(LabelMode::Degeneralized.to_string(), "degeneralized");
    }

    #[test]
    fn diagnostic_fires_for_deep_chains() {
        let mut b = LtsBuilder::with_arity(1);
        let mut prev = b.state(&[false]);
        for _ in 0..400 {
            let next = b.state(&[false]);
            b.edge(prev, &Event::new("a"), next);
            prev = next;
        }
        let lts = b.build();
        assert!(epsilon_diagnostic(&lts, 0.95, 1e-6).is_some());
        assert!(epsilon_diagnostic(&chain(), 0.95, 1e-6).is_none());
    }
}
