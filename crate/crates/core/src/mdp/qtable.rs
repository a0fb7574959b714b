use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::LabelMode;
use crate::arbiter::SeededRng;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::program::CompositeState;

const SCHEMA: &str = "bp-liveness/qtable/v1";

/// Action values per state, rows in canonical event order. Clones share the
/// state index.
#[derive(Debug, Clone)]
pub struct QTable {
    gamma: f64,
    epsilon: f64,
    label_mode: LabelMode,
    residual: f64,
    states: Arc<Vec<CompositeState>>,
    index: Arc<HashMap<CompositeState, usize>>,
    rows: Vec<Vec<(Event, f64)>>,
}

impl QTable {
    pub(crate) fn from_rows(
        states: Vec<CompositeState>,
        mut rows: Vec<Vec<(Event, f64)>>,
        gamma: f64,
        epsilon: f64,
        label_mode: LabelMode,
        residual: f64,
    ) -> Self {
        for r in &mut rows {
            r.sort_by(|a, b| a.0.cmp(&b.0));
        }
        let index = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        QTable {
            gamma,
            epsilon,
            label_mode,
            residual,
            states: Arc::new(states),
            index: Arc::new(index),
            rows,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn label_mode(&self) -> LabelMode {
        self.label_mode
    }

    /// Final sup-norm update of the solver (0 for learned tables).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn states(&self) -> &[CompositeState] {
        &self.states
    }

    pub fn row(&self, s: &CompositeState) -> Option<&[(Event, f64)]> {
        self.index.get(s).map(|&i| self.rows[i].as_slice())
    }

    pub fn get(&self, s: &CompositeState, e: &Event) -> Option<f64> {
        let row = self.row(s)?;
        row.binary_search_by(|(x, _)| x.cmp(e))
            .ok()
            .map(|i| row[i].1)
    }

    /// First maximizing event in canonical order.
    pub fn greedy(&self, s: &CompositeState) -> Option<&Event> {
        let row = self.row(s)?;
        let mut best: Option<&(Event, f64)> = None;
        for entry in row {
            if best.is_none_or(|b| entry.1 > b.1) {
                best = Some(entry);
            }
        }
        best.map(|(e, _)| e)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flatten()
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_dump()).expect("q-table dump is serializable")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, &self.to_dump())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::from_dump(serde_json::from_reader(f)?)
    }

    pub fn from_json(v: serde_json::Value) -> Result<Self> {
        Self::from_dump(serde_json::from_value(v)?)
    }

    fn to_dump(&self) -> Dump {
        Dump {
            schema: SCHEMA.to_string(),
            gamma: self.gamma,
            epsilon: self.epsilon,
            label_mode: self.label_mode,
            residual: self.residual,
            states: self.states.to_vec(),
            entries: self
                .rows
                .iter()
                .enumerate()
                .flat_map(|(i, r)| r.iter().map(move |(e, v)| (i, e.clone(), *v)))
                .collect(),
        }
    }

    fn from_dump(d: Dump) -> Result<Self> {
        if d.schema != SCHEMA {
            return Err(Error::QTable(format!("unsupported schema `{}`", d.schema)));
        }
        if !(d.gamma > 0.0 && d.gamma < 1.0) {
            return Err(Error::QTable(format!("gamma {} outside (0,1)", d.gamma)));
        }
        let mut rows = vec![Vec::new(); d.states.len()];
        for (i, e, v) in d.entries {
            let row = rows
                .get_mut(i)
                .ok_or_else(|| Error::QTable(format!("entry refers to missing state {i}")))?;
            row.push((e, v));
        }
        Ok(Self::from_rows(
            d.states,
            rows,
            d.gamma,
            d.epsilon,
            d.label_mode,
            d.residual,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct Dump {
    schema: String,
    gamma: f64,
    epsilon: f64,
    label_mode: LabelMode,
    residual: f64,
    states: Vec<CompositeState>,
    entries: Vec<(usize, Event, f64)>,
}

/// Adds independent `N(0, sigma²)` noise to every entry.
pub fn perturb_q(q: &QTable, sigma: f64, seed: u64) -> QTable {
    assert!(sigma >= 0.0, "sigma must be non-negative");
    let mut out = q.clone();
    if sigma == 0.0 {
        return out;
    }
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut rng = SeededRng::seed_from_u64(seed);
    for row in &mut out.rows {
        for (_, v) in row {
            *v += normal.sample(&mut rng);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::local;

    fn table() -> QTable {
        let s0 = CompositeState(vec![local(&[0])]);
        let s1 = CompositeState(vec![local(&[1])]);
        QTable::from_rows(
            vec![s0, s1],
            vec![
                vec![(Event::new("b"), 0.25), (Event::new("a"), -0.1 + 0.2)],
                vec![(Event::stutter(), 0.0)],
            ],
            0.9,
            1e-6,
            LabelMode::Single,
            1e-10,
        )
    }

    #[test]
    fn greedy_prefers_first_maximum() {
        let s0 = CompositeState(vec![local(&[0])]);
        let t = QTable::from_rows(
            vec![s0.clone()],
            vec![vec![(Event::new("b"), 1.0), (Event::new("a"), 1.0)]],
            0.9,
            1e-6,
            LabelMode::Single,
            0.0,
        );
        assert_eq!(t.greedy(&s0).unwrap().name(), "a");
    }

    #[test]
    fn json_preserves_values_exactly() {
        let t = table();
        let back = QTable::from_json(t.to_json()).unwrap();
        assert_eq!(back.entry_count(), t.entry_count());
        for s in t.states() {
            assert_eq!(back.row(s).unwrap(), t.row(s).unwrap());
        }
        assert_eq!(back.residual().to_bits(), t.residual().to_bits());
    }

    #[test]
    fn rejects_foreign_schema() {
        let mut v = table().to_json();
        v["schema"] = "other".into();
        assert!(matches!(QTable::from_json(v), Err(Error::QTable(_))));
    }

    #[test]
    fn perturbation_is_seeded() {
        let t = table();
        let s0 = &t.states()[0];
        assert_eq!(perturb_q(&t, 0.0, 1).row(s0), t.row(s0));
        let a = perturb_q(&t, 0.1, 7);
        let b = perturb_q(&t, 0.1, 7);
        assert_eq!(a.row(s0), b.row(s0));
        assert_ne!(a.row(s0), t.row(s0));
        assert_eq!(a.gamma(), t.gamma());
    }
}
