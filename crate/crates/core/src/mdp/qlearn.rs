use std::collections::HashMap;

use rand::{Rng, SeedableRng};

use super::monitor::{monitor_step, product_key};
use super::reward::{any, mode_reward, transition_reward};
use super::{LabelMode, QTable, DEFAULT_EPSILON, DEFAULT_GAMMA};
use crate::arbiter::SeededRng;
use crate::event::Event;
use crate::program::{BProgram, CompositeState};

#[derive(Debug, Clone)]
pub struct QLearningConfig {
    pub episodes: usize,
    pub max_steps: usize,
    /// Learning rate in (0, 1].
    pub alpha: f64,
    pub gamma: f64,
    /// Probability of a uniformly random enabled event.
    pub exploration: f64,
    pub seed: u64,
    pub label_mode: LabelMode,
    /// Stored in the resulting table for the compatibility test.
    pub epsilon: f64,
}

impl Default for QLearningConfig {
    fn default() -> Self {
        QLearningConfig {
            episodes: 2000,
            max_steps: 200,
            alpha: 0.5,
            gamma: DEFAULT_GAMMA,
            exploration: 0.3,
            seed: 0,
            label_mode: LabelMode::Single,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

struct Table {
    index: HashMap<CompositeState, usize>,
    states: Vec<CompositeState>,
    rows: Vec<Vec<(Event, f64)>>,
}

impl Table {
    fn row(&mut self, key: CompositeState, enabled: impl FnOnce() -> Vec<Event>) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.states.len();
        self.rows
            .push(enabled().into_iter().map(|e| (e, 0.0)).collect());
        self.index.insert(key.clone(), i);
        self.states.push(key);
        i
    }

    fn max(&self, i: usize) -> f64 {
        self.rows[i]
            .iter()
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tabular Q-learning over repeated executions of `program`.
///
/// Actions are masked to the enabled events. A deadlock is terminal with
/// value 0 (it stutters with zero reward forever); hitting the step cap
/// bootstraps from the current estimate.
pub fn q_learning(program: &BProgram, cfg: &QLearningConfig) -> QTable {
    assert!(
        cfg.alpha > 0.0 && cfg.alpha <= 1.0,
        "alpha must lie in (0,1]"
    );
    assert!(
        cfg.gamma > 0.0 && cfg.gamma < 1.0,
        "gamma must lie in (0,1)"
    );
    assert!(
        (0.0..=1.0).contains(&cfg.exploration),
        "exploration must lie in [0,1]"
    );
    let mut rng = SeededRng::seed_from_u64(cfg.seed);
    let mut t = Table {
        index: HashMap::new(),
        states: Vec::new(),
        rows: Vec::new(),
    };
    let mode = cfg.label_mode;
    let key_of = |s: &CompositeState, c: usize| match mode {
        LabelMode::Degeneralized => product_key(s, c),
        _ => s.clone(),
    };
    // reward between consecutive states, and monitor counter update
    let step_reward = |from: &[bool], to: &[bool], c: usize| -> (f64, usize) {
        match mode {
            LabelMode::Degeneralized => {
                let (h0, c_out) = monitor_step(from, c);
                let (h1, _) = monitor_step(to, c_out);
                (transition_reward(h0, h1), c_out)
            }
            LabelMode::Single => (transition_reward(any(from), any(to)), 0),
            LabelMode::PerThreadSum => (mode_reward(from, to, mode), 0),
        }
    };

    for _ in 0..cfg.episodes {
        let mut s = program.initial();
        let mut labels = program.local_labels(&s);
        let mut c = 0usize;
        for _ in 0..cfg.max_steps {
            let point = program.sync_point(&s);
            if point.enabled().is_empty() {
                break;
            }
            let i = t.row(key_of(&s, c), || point.enabled().to_vec());
            let a = if rng.random::<f64>() < cfg.exploration {
                rng.random_range(0..t.rows[i].len())
            } else {
                let best = t.max(i);
                let ties: Vec<usize> = (0..t.rows[i].len())
                    .filter(|&k| t.rows[i][k].1 == best)
                    .collect();
                ties[rng.random_range(0..ties.len())]
            };
            let event = t.rows[i][a].0.clone();
            let next = point.advance_unchecked(&event);
            let next_labels = program.local_labels(&next);
            let (r, c_next) = step_reward(&labels, &next_labels, c);
            let next_enabled = program.enabled_events(&next);
            let future = if next_enabled.is_empty() {
                0.0
            } else {
                let j = t.row(key_of(&next, c_next), || next_enabled);
                t.max(j)
            };
            let q = &mut t.rows[i][a].1;
            *q += cfg.alpha * (r + cfg.gamma * future - *q);
            s = next;
            labels = next_labels;
            c = c_next;
        }
    }
    QTable::from_rows(t.states, t.rows, cfg.gamma, cfg.epsilon, mode, 0.0)
}
