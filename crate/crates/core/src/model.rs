//! Core semantics of factored transition systems: states, actions,
//! execution, plans, costs, and problem well-formedness.
//!
//! A state is a finite partial assignment of boolean variables. An action is
//! a pair of states (preconditions, effects). Executing an action whose
//! preconditions are not contained in the current state is a no-op, not an
//! error; the validator flags suspicious problems instead.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// A state-characterising propositional variable, identified by name.
///
/// Variables are totally ordered by name so that every set iteration in the
/// toolkit is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

/// A partial assignment of variables to booleans.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(BTreeMap<Var, bool>);

impl State {
    pub fn new() -> Self {
        State(BTreeMap::new())
    }

    /// Builds a state from `(name, value)` pairs. Later entries overwrite
    /// earlier ones for the same variable.
    pub fn from_pairs<I, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (V, bool)>,
        V: Into<Var>,
    {
        State(pairs.into_iter().map(|(v, b)| (v.into(), b)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, v: &Var) -> Option<bool> {
        self.0.get(v).copied()
    }

    pub fn set(&mut self, v: Var, b: bool) {
        self.0.insert(v, b);
    }

    pub fn remove(&mut self, v: &Var) -> Option<bool> {
        self.0.remove(v)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, bool)> {
        self.0.iter().map(|(v, b)| (v, *b))
    }

    /// Maplet containment: every assignment of `self` also appears in
    /// `other`. A variable of `self` missing from `other` fails containment.
    pub fn contained_in(&self, other: &State) -> bool {
        self.iter().all(|(v, b)| other.get(v) == Some(b))
    }

    /// Left-biased union: on shared variables `self` wins.
    pub fn union(&self, other: &State) -> State {
        let mut out = other.0.clone();
        for (v, b) in &self.0 {
            out.insert(v.clone(), *b);
        }
        State(out)
    }

    /// Projection onto a variable set: keeps only maplets whose variable is
    /// in `vars`.
    pub fn project(&self, vars: &BTreeSet<Var>) -> State {
        State(
            self.0
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, b)| (v.clone(), *b))
                .collect(),
        )
    }
}

impl fmt::Display for State {
    /// Renders as a literal set, e.g. `{a, -b}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, b)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if b {
                write!(f, "{v}")?;
            } else {
                write!(f, "-{v}")?;
            }
        }
        write!(f, "}}")
    }
}

/// An action: a precondition state and an effect state, plus an optional
/// stable label used for reporting and plan files.
///
/// Actions compare structurally first (preconditions, then effects), with
/// the label as a tie-breaker, so two actions differing only in label are
/// distinct set members with identical semantics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pre: State,
    eff: State,
    label: Option<String>,
}

impl Action {
    pub fn new(pre: State, eff: State) -> Self {
        Action {
            pre,
            eff,
            label: None,
        }
    }

    pub fn with_label(pre: State, eff: State, label: impl Into<String>) -> Self {
        Action {
            pre,
            eff,
            label: Some(label.into()),
        }
    }

    pub fn pre(&self) -> &State {
        &self.pre
    }

    pub fn eff(&self) -> &State {
        &self.eff
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// The action's domain: union of precondition and effect domains.
    pub fn domain(&self) -> BTreeSet<Var> {
        self.pre
            .domain()
            .chain(self.eff.domain())
            .cloned()
            .collect()
    }

    /// A printable name: the label when present, otherwise the structural
    /// form `(pre, eff)`.
    pub fn display_name(&self) -> String {
        match &self.label {
            Some(l) => l.clone(),
            None => format!("({}, {})", self.pre, self.eff),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_name())
    }
}

/// A set of actions together with the variable universe they act on.
///
/// The universe always contains the union of the member action domains; it
/// may be strictly larger when variables were declared without being used
/// by any action (the state space then still ranges over them).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactoredSystem {
    actions: BTreeSet<Action>,
    vars: BTreeSet<Var>,
}

impl FactoredSystem {
    /// System over exactly the variables mentioned by the actions.
    pub fn from_actions<I: IntoIterator<Item = Action>>(actions: I) -> Self {
        let actions: BTreeSet<Action> = actions.into_iter().collect();
        let vars = actions.iter().flat_map(|a| a.domain()).collect();
        FactoredSystem { actions, vars }
    }

    /// System with an explicitly declared variable universe. Variables used
    /// by actions are added to `vars` if missing.
    pub fn with_vars<I, V>(actions: I, vars: V) -> Self
    where
        I: IntoIterator<Item = Action>,
        V: IntoIterator<Item = Var>,
    {
        let mut sys = Self::from_actions(actions);
        sys.vars.extend(vars);
        sys
    }

    pub fn actions(&self) -> impl ExactSizeIterator<Item = &Action> {
        self.actions.iter()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn contains(&self, a: &Action) -> bool {
        self.actions.contains(a)
    }

    /// The variable universe `D(δ)`.
    pub fn vars(&self) -> &BTreeSet<Var> {
        &self.vars
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    /// Whether `s` is a valid state: a total assignment over the universe.
    pub fn is_valid_state(&self, s: &State) -> bool {
        s.len() == self.vars.len() && s.domain().all(|v| self.vars.contains(v))
    }
}

/// Cost mapping from actions to nonnegative integers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostMap(BTreeMap<Action, u64>);

impl CostMap {
    pub fn new() -> Self {
        CostMap(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Action, u64)>>(pairs: I) -> Self {
        CostMap(pairs.into_iter().collect())
    }

    pub fn insert(&mut self, a: Action, cost: u64) {
        self.0.insert(a, cost);
    }

    pub fn get(&self, a: &Action) -> Option<u64> {
        self.0.get(a).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Action, u64)> {
        self.0.iter().map(|(a, c)| (a, *c))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies `f` to every cost, as in the problem transformation `f(Π)`.
    pub fn map_costs(&self, f: impl Fn(u64) -> u64) -> CostMap {
        CostMap(self.0.iter().map(|(a, c)| (a.clone(), f(*c))).collect())
    }
}

/// A finite sequence of actions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Plan(Vec<Action>);

impl Plan {
    pub fn new(steps: Vec<Action>) -> Self {
        Plan(steps)
    }

    pub fn empty() -> Self {
        Plan(Vec::new())
    }

    pub fn steps(&self) -> &[Action] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Action> {
        self.0.iter()
    }
}

impl FromIterator<Action> for Plan {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        Plan(iter.into_iter().collect())
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")
    }
}

/// A planning problem: system, cost map, initial valid state, goal partial
/// state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub system: FactoredSystem,
    pub costs: CostMap,
    pub init: State,
    pub goal: State,
}

impl Problem {
    pub fn new(system: FactoredSystem, costs: CostMap, init: State, goal: State) -> Self {
        Problem {
            system,
            costs,
            init,
            goal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("plan step `{0}` has no cost entry")]
    MissingCost(String),
}

/// Left-biased state union `x1 ⊎ x2`: `x1` wins on shared variables.
pub fn state_union(x1: &State, x2: &State) -> State {
    x1.union(x2)
}

/// Executes one action. If the precondition is not contained in `x` the
/// action is a no-op and `x` is returned unchanged; otherwise the successor
/// is `eff ⊎ x`.
pub fn execute_action(x: &State, a: &Action) -> State {
    if !a.pre().contained_in(x) {
        x.clone()
    } else {
        a.eff().union(x)
    }
}

/// Executes a sequence of actions: a left fold of [`execute_action`].
pub fn execute_sequence(x: &State, plan: &Plan) -> State {
    plan.iter().fold(x.clone(), |s, a| execute_action(&s, a))
}

/// Total plan cost: the sum of per-step costs in sequence order, with
/// repetitions counted. A step without a cost entry is a malformed-problem
/// error, not zero.
pub fn plan_cost(costs: &CostMap, plan: &Plan) -> Result<u64, ModelError> {
    let mut total: u64 = 0;
    for a in plan.iter() {
        let c = costs
            .get(a)
            .ok_or_else(|| ModelError::MissingCost(a.display_name()))?;
        total += c;
    }
    Ok(total)
}

/// Whether `plan` solves `prob`: every step is a member of the system and
/// the goal is contained in the final state.
pub fn is_solution(prob: &Problem, plan: &Plan) -> bool {
    plan.iter().all(|a| prob.system.contains(a))
        && prob
            .goal
            .contained_in(&execute_sequence(&prob.init, plan))
}

/// A well-formedness defect found by [`validate_problem`]. Defects are
/// data, not failures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Defect {
    /// `domain(init) ≠ domain(system)`: the named variable is missing from
    /// or extraneous to the initial state.
    InitNotValidState { var: Var, missing: bool },
    /// The goal constrains a variable outside the system domain.
    GoalOutsideDomain { var: Var },
    /// An action has no cost entry.
    MissingCost { action: String },
    /// Two actions with identical preconditions and effects carry different
    /// costs; a cost mapping over a set of actions cannot express that.
    DuplicateActionDistinctCost { first: String, second: String },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::InitNotValidState { var, missing } => {
                if *missing {
                    write!(f, "init is not a valid state: variable `{var}` unassigned")
                } else {
                    write!(f, "init is not a valid state: variable `{var}` is outside the system domain")
                }
            }
            Defect::GoalOutsideDomain { var } => {
                write!(f, "goal constrains `{var}`, which is outside the system domain")
            }
            Defect::MissingCost { action } => {
                write!(f, "cost map is partial: action `{action}` has no cost")
            }
            Defect::DuplicateActionDistinctCost { first, second } => {
                write!(
                    f,
                    "actions `{first}` and `{second}` are syntactically equal but carry different costs"
                )
            }
        }
    }
}

/// Checks problem well-formedness: init must be a valid state, the goal
/// must stay inside the system domain, and the cost map must be total and
/// consistent on structurally equal actions.
pub fn validate_problem(prob: &Problem) -> Vec<Defect> {
    let mut defects = Vec::new();
    let sys_vars = prob.system.vars();

    for v in sys_vars {
        if prob.init.get(v).is_none() {
            defects.push(Defect::InitNotValidState {
                var: v.clone(),
                missing: true,
            });
        }
    }
    for v in prob.init.domain() {
        if !sys_vars.contains(v) {
            defects.push(Defect::InitNotValidState {
                var: v.clone(),
                missing: false,
            });
        }
    }
    for v in prob.goal.domain() {
        if !sys_vars.contains(v) {
            defects.push(Defect::GoalOutsideDomain { var: v.clone() });
        }
    }
    for a in prob.system.actions() {
        if prob.costs.get(a).is_none() {
            defects.push(Defect::MissingCost {
                action: a.display_name(),
            });
        }
    }

    // Structurally equal actions must agree on cost.
    let actions: Vec<&Action> = prob.system.actions().collect();
    for (i, a) in actions.iter().enumerate() {
        for b in &actions[i + 1..] {
            if a.pre() == b.pre() && a.eff() == b.eff() {
                if let (Some(ca), Some(cb)) = (prob.costs.get(a), prob.costs.get(b)) {
                    if ca != cb {
                        defects.push(Defect::DuplicateActionDistinctCost {
                            first: a.display_name(),
                            second: b.display_name(),
                        });
                    }
                }
            }
        }
    }

    defects
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{act, clique_problem, clique_system, expensive_shortcut_problem, st};

    #[test]
    fn union_left_precedence() {
        let x1 = st(&[("a", true)]);
        let x2 = st(&[("a", false), ("b", true)]);
        assert_eq!(state_union(&x1, &x2), st(&[("a", true), ("b", true)]));

        assert_eq!(state_union(&State::new(), &st(&[("b", true)])), st(&[("b", true)]));

        let x1 = st(&[("v1", true), ("v2", false)]);
        let x2 = st(&[("v1", false), ("v2", false), ("u1", true)]);
        assert_eq!(
            state_union(&x1, &x2),
            st(&[("v1", true), ("v2", false), ("u1", true)])
        );
    }

    #[test]
    fn execute_follows_noop_semantics() {
        // π1 from the two-variable chain system: only applicable at -v1-v2.
        let pi1 = act("pi1", &[("v1", false), ("v2", false)], &[("v1", true), ("v2", false)]);
        let x = st(&[("v1", false), ("v2", false)]);
        assert_eq!(execute_action(&x, &pi1), st(&[("v1", true), ("v2", false)]));

        let x = st(&[("v1", true), ("v2", true)]);
        assert_eq!(execute_action(&x, &pi1), x, "unsatisfied precondition is a no-op");

        // Empty-precondition action from the clique system.
        let a = act("a", &[], &[("v1", true), ("v2", true)]);
        let x = st(&[("v1", false), ("v2", false)]);
        assert_eq!(execute_action(&x, &a), st(&[("v1", true), ("v2", true)]));
    }

    #[test]
    fn execute_sequence_folds() {
        // In the clique problem, [π2, π1] reaches the all-true goal.
        let prob = clique_problem();
        let pi1 = act("pi1", &[], &[("v1", true), ("v2", true)]);
        let pi2 = act("pi2", &[], &[("v1", false), ("v2", true)]);
        let p = Plan::new(vec![pi2, pi1]);
        assert_eq!(
            execute_sequence(&prob.init, &p),
            st(&[("v1", true), ("v2", true)])
        );

        let x = st(&[("a", true)]);
        assert_eq!(execute_sequence(&x, &Plan::empty()), x);

        // Three chained effect-only actions reach the all-true state.
        let pi1 = act("pi1", &[], &[("v1", true), ("v3", true)]);
        let pi2 = act("pi2", &[], &[("v1", false), ("v2", true)]);
        let pi3 = act("pi3", &[], &[("v1", true)]);
        let x = st(&[("v1", false), ("v2", false), ("v3", false)]);
        let p = Plan::new(vec![pi1, pi2, pi3]);
        assert_eq!(
            execute_sequence(&x, &p),
            st(&[("v1", true), ("v2", true), ("v3", true)])
        );
    }

    #[test]
    fn plan_cost_sums_in_order() {
        let prob = clique_problem();
        let pi1 = act("pi1", &[], &[("v1", true), ("v2", true)]);
        let pi2 = act("pi2", &[], &[("v1", false), ("v2", true)]);
        assert_eq!(plan_cost(&prob.costs, &Plan::new(vec![pi2, pi1])).unwrap(), 2);
        assert_eq!(plan_cost(&prob.costs, &Plan::empty()).unwrap(), 0);

        let dnot = expensive_shortcut_problem();
        let pi3 = act(
            "pi3",
            &[("v1", false), ("v2", false)],
            &[("v1", false), ("v2", true)],
        );
        assert_eq!(plan_cost(&dnot.costs, &Plan::new(vec![pi3])).unwrap(), 3);
    }

    #[test]
    fn plan_cost_rejects_missing_entry() {
        let prob = clique_problem();
        let stranger = act("x", &[], &[("v1", true)]);
        let err = plan_cost(&prob.costs, &Plan::new(vec![stranger])).unwrap_err();
        assert!(matches!(err, ModelError::MissingCost(_)));
    }

    #[test]
    fn solution_check() {
        let prob = clique_problem();
        let pi1 = act("pi1", &[], &[("v1", true), ("v2", true)]);
        assert!(is_solution(&prob, &Plan::new(vec![pi1])));
        assert!(!is_solution(&prob, &Plan::empty()));

        let dnot = expensive_shortcut_problem();
        let pi1 = act(
            "pi1",
            &[("v1", false), ("v2", false)],
            &[("v1", true), ("v2", false)],
        );
        let pi2 = act(
            "pi2",
            &[("v1", true), ("v2", false)],
            &[("v1", false), ("v2", true)],
        );
        let p = Plan::new(vec![pi1, pi2]);
        assert!(is_solution(&dnot, &p));
        assert_eq!(plan_cost(&dnot.costs, &p).unwrap(), 2);
    }

    #[test]
    fn validate_flags_defects() {
        let prob = clique_problem();
        assert!(validate_problem(&prob).is_empty());

        let mut bad = prob.clone();
        bad.init = st(&[("v1", false)]);
        let defects = validate_problem(&bad);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::InitNotValidState { .. })));

        let mut partial = prob.clone();
        partial.costs = CostMap::new();
        let defects = validate_problem(&partial);
        assert!(defects.iter().any(|d| matches!(d, Defect::MissingCost { .. })));
    }

    #[test]
    fn validate_rejects_equal_actions_with_distinct_costs() {
        let a1 = act("a1", &[], &[("v", true)]);
        let a2 = act("a2", &[], &[("v", true)]);
        let sys = FactoredSystem::from_actions([a1.clone(), a2.clone()]);
        let costs = CostMap::from_pairs([(a1, 1), (a2, 2)]);
        let prob = Problem::new(sys, costs, st(&[("v", false)]), st(&[("v", true)]));
        let defects = validate_problem(&prob);
        assert!(defects
            .iter()
            .any(|d| matches!(d, Defect::DuplicateActionDistinctCost { .. })));
    }

    #[test]
    fn execution_preserves_validity() {
        let sys = clique_system();
        let all_false = st(&[("v1", false), ("v2", false)]);
        assert!(sys.is_valid_state(&all_false));
        for a in sys.actions() {
            assert!(sys.is_valid_state(&execute_action(&all_false, a)));
        }
    }

    proptest::proptest! {
        #[test]
        fn union_respects_left_precedence(seed in 0u64..500) {
            let spec = crate::genrand::GenSpec { seed, ..Default::default() };
            let sys = crate::genrand::gen_system(&spec);
            let mut rng = spec.rng();
            let x1 = crate::genrand::random_partial_state(&sys, &mut rng);
            let x2 = crate::genrand::random_partial_state(&sys, &mut rng);
            let u = state_union(&x1, &x2);
            for (v, b) in x1.iter() {
                proptest::prop_assert_eq!(u.get(v), Some(b));
            }
            for (v, b) in x2.iter() {
                if x1.get(v).is_none() {
                    proptest::prop_assert_eq!(u.get(v), Some(b));
                }
            }
        }

        #[test]
        fn fold_and_cost_decompose(seed in 0u64..300) {
            let spec = crate::genrand::GenSpec { seed, ..Default::default() };
            let prob = crate::genrand::gen_problem(&spec);
            let mut rng = spec.rng();
            let p1 = crate::genrand::random_plan(&prob.system, 0..=3, &mut rng);
            let p2 = crate::genrand::random_plan(&prob.system, 0..=3, &mut rng);
            let joined: Plan = p1.iter().chain(p2.iter()).cloned().collect();

            let via_parts = execute_sequence(&execute_sequence(&prob.init, &p1), &p2);
            proptest::prop_assert_eq!(execute_sequence(&prob.init, &joined), via_parts);

            let cost_joined = plan_cost(&prob.costs, &joined).unwrap();
            let cost_parts =
                plan_cost(&prob.costs, &p1).unwrap() + plan_cost(&prob.costs, &p2).unwrap();
            proptest::prop_assert_eq!(cost_joined, cost_parts);
        }
    }
}
