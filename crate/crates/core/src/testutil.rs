//! Shared helpers for unit tests.

pub use crate::samples::*;

use crate::model::{Action, State};

pub fn st(pairs: &[(&str, bool)]) -> State {
    State::from_pairs(pairs.iter().map(|(v, b)| (*v, *b)))
}

pub fn act(label: &str, pre: &[(&str, bool)], eff: &[(&str, bool)]) -> Action {
    Action::with_label(st(pre), st(eff), label)
}
