//! Small hand-built systems and problems used throughout the test suite and
//! documentation. Each constructor names the state-space shape it realizes.

use crate::model::{Action, CostMap, FactoredSystem, Plan, Problem, State};

fn s(pairs: &[(&str, bool)]) -> State {
    State::from_pairs(pairs.iter().map(|(v, b)| (*v, *b)))
}

fn a(label: &str, pre: &[(&str, bool)], eff: &[(&str, bool)]) -> Action {
    Action::with_label(s(pre), s(eff), label)
}

/// Four effect-only actions over two variables, one per full assignment.
/// Every state reaches every state in one step: the state space is a
/// 4-clique. Diameter 1, recurrence diameter 3, sublist diameter 1.
pub fn clique_system() -> FactoredSystem {
    FactoredSystem::from_actions([
        a("pi1", &[], &[("v1", true), ("v2", true)]),
        a("pi2", &[], &[("v1", false), ("v2", true)]),
        a("pi3", &[], &[("v1", true), ("v2", false)]),
        a("pi4", &[], &[("v1", false), ("v2", false)]),
    ])
}

/// The clique system with unit costs, starting all-false with an all-true
/// goal. `[pi2, pi1]` solves it at cost 2; `[pi1]` is optimal at cost 1.
pub fn clique_problem() -> Problem {
    let sys = clique_system();
    let costs = CostMap::from_pairs(sys.actions().map(|x| (x.clone(), 1)));
    Problem::new(
        sys,
        costs,
        s(&[("v1", false), ("v2", false)]),
        s(&[("v1", true), ("v2", true)]),
    )
}

/// A two-variable system whose diameter (1) understates the cheapest way to
/// the goal: the direct step `pi3` costs 3 while the two-step route
/// `[pi1, pi2]` costs 2. Demonstrates that the diameter is not a horizon
/// one can trust for cost optimality.
pub fn expensive_shortcut_system() -> FactoredSystem {
    FactoredSystem::from_actions([
        a(
            "pi1",
            &[("v1", false), ("v2", false)],
            &[("v1", true), ("v2", false)],
        ),
        a(
            "pi2",
            &[("v1", true), ("v2", false)],
            &[("v1", false), ("v2", true)],
        ),
        a(
            "pi3",
            &[("v1", false), ("v2", false)],
            &[("v1", false), ("v2", true)],
        ),
    ])
}

/// Cost mapping for [`expensive_shortcut_system`]: `pi1, pi2 ↦ 1`, `pi3 ↦ 3`.
pub fn expensive_shortcut_costs(sys: &FactoredSystem) -> CostMap {
    CostMap::from_pairs(sys.actions().map(|x| {
        let c = if x.label() == Some("pi3") { 3 } else { 1 };
        (x.clone(), c)
    }))
}

/// The expensive-shortcut system as a problem: init all-false, goal
/// `{-v1, v2}`. Optimal cost 2 via `[pi1, pi2]`.
pub fn expensive_shortcut_problem() -> Problem {
    let sys = expensive_shortcut_system();
    let costs = expensive_shortcut_costs(&sys);
    Problem::new(
        sys,
        costs,
        s(&[("v1", false), ("v2", false)]),
        s(&[("v1", false), ("v2", true)]),
    )
}

/// Three effect-only actions over three variables where later effects
/// overwrite earlier ones. The order-preserving shortening of
/// `[pi1, pi2, pi3]` needs all 3 steps, while reordering as `[pi2, pi1]`
/// reaches the same state in 2: sublist diameter 3, subset diameter 2.
pub fn overwrite_system() -> FactoredSystem {
    FactoredSystem::from_actions([
        a("pi1", &[], &[("v1", true), ("v3", true)]),
        a("pi2", &[], &[("v1", false), ("v2", true)]),
        a("pi3", &[], &[("v1", true)]),
    ])
}

/// Star with directed spokes out of the all-false hub: the hub reaches each
/// of the three other states in one step and nothing returns. Traversal
/// diameter 1, recurrence diameter 1.
pub fn star_out_system() -> FactoredSystem {
    FactoredSystem::from_actions([
        a(
            "to11",
            &[("v1", false), ("v2", false)],
            &[("v1", true), ("v2", true)],
        ),
        a("to01", &[("v1", false), ("v2", false)], &[("v2", true)]),
        a("to10", &[("v1", false), ("v2", false)], &[("v1", true)]),
    ])
}

/// Star with bidirectional spokes around the all-false hub. A walk can
/// bounce through the hub and traverse all 4 states (traversal diameter 3)
/// but no simple path has more than 2 edges (recurrence diameter 2).
pub fn star_bidir_system() -> FactoredSystem {
    let mut actions: Vec<Action> = star_out_system().actions().cloned().collect();
    actions.extend([
        a(
            "from11",
            &[("v1", true), ("v2", true)],
            &[("v1", false), ("v2", false)],
        ),
        a("from01", &[("v1", false), ("v2", true)], &[("v2", false)]),
        a("from10", &[("v1", true), ("v2", false)], &[("v1", false)]),
    ]);
    FactoredSystem::from_actions(actions)
}

/// Looks an action up by label in a system built by this module.
pub fn action_by_label(sys: &FactoredSystem, label: &str) -> Action {
    sys.actions()
        .find(|x| x.label() == Some(label))
        .unwrap_or_else(|| panic!("no action labelled `{label}`"))
        .clone()
}

/// Builds the plan `[labels...]` out of a sample system.
pub fn plan_of(sys: &FactoredSystem, labels: &[&str]) -> Plan {
    labels.iter().map(|l| action_by_label(sys, l)).collect()
}
