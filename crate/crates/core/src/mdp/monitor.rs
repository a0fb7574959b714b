//! Counter monitor reducing n liveness labels to one.

use std::collections::VecDeque;

use crate::explorer::{ExploredLts, LtsBuilder};
use crate::program::{local, CompositeState};

/// One monitor step at a state with label vector `labels`, entered with
/// counter `c_in`. Skips over threads whose label is 0; if all remaining
/// threads are skipped the combined label is 0 and the counter resets.
/// Returns `(combined_label, c_out)`.
pub fn monitor_step(labels: &[bool], c_in: usize) -> (bool, usize) {
    let mut c = c_in;
    while c < labels.len() && !labels[c] {
        c += 1;
    }
    if c == labels.len() {
        (false, 0)
    } else {
        (true, c)
    }
}

/// Product state key: the carrier state with the monitor counter appended.
pub fn product_key(s: &CompositeState, c_in: usize) -> CompositeState {
    s.extended(local(&[c_in as i32]))
}

/// Product of `lts` with the counter monitor. The result has a single label
/// (thread id `monitor`) that is 0 infinitely often iff every input label is.
pub fn degeneralize_labels(lts: &ExploredLts) -> ExploredLts {
    let mut b = LtsBuilder::new(vec!["monitor".to_string()]);
    let init = (lts.init(), 0usize);
    let (hot, _) = monitor_step(lts.labels(init.0), 0);
    let i0 = b.state_with(product_key(lts.state(init.0), 0), &[hot]);
    let mut ids = std::collections::HashMap::from([(init, i0)]);
    let mut queue = VecDeque::from([init]);
    while let Some((s, c)) = queue.pop_front() {
        let from = ids[&(s, c)];
        let (_, c_out) = monitor_step(lts.labels(s), c);
        for e in lts.edges(s) {
            let key = (e.target, c_out);
            let to = match ids.get(&key) {
                Some(&i) => i,
                None => {
                    let (h, _) = monitor_step(lts.labels(e.target), c_out);
                    let i = b.state_with(product_key(lts.state(e.target), c_out), &[h]);
                    ids.insert(key, i);
                    queue.push_back(key);
                    i
                }
            };
            b.edge(from, lts.event(e.event), to);
        }
    }
    b.build()
}
