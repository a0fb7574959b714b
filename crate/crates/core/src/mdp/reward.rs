//! Liveness rewards.

use super::LabelMode;

/// `-1` on entering must-finish, `+1` on leaving it, `0` otherwise.
pub fn transition_reward(prev_hot: bool, next_hot: bool) -> f64 {
    match (prev_hot, next_hot) {
        (false, true) => -1.0,
        (true, false) => 1.0,
        _ => 0.0,
    }
}

/// Reward between two label vectors under `mode`.
///
/// `Single` and `Degeneralized` combine the vector by disjunction (a
/// degeneralized carrier has one label already). `PerThreadSum` adds the
/// per-thread rewards.
pub fn mode_reward(from: &[bool], to: &[bool], mode: LabelMode) -> f64 {
    debug_assert_eq!(from.len(), to.len());
    match mode {
        LabelMode::Single | LabelMode::Degeneralized => transition_reward(any(from), any(to)),
        LabelMode::PerThreadSum => from
            .iter()
            .zip(to)
            .map(|(&a, &b)| transition_reward(a, b))
            .sum(),
    }
}

pub(crate) fn any(labels: &[bool]) -> bool {
    labels.iter().any(|&l| l)
}
