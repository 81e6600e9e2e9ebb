//! Cost compilation: binary counter states, augmented actions, systems and
//! problems, gcd cost scaling, and greedy action factoring.
//!
//! The augmentation embeds accumulated plan cost into the state. Fresh
//! counter variables binary-encode a running total; an action of cost `c`
//! gets one augmented copy per feasible counter value `i`, with
//! preconditions pinned to `i` and effects writing `i + c`. Every execution
//! of the augmented system therefore tracks its own cost and can never
//! exceed the budget.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{
    validate_problem, Action, CostMap, Defect, FactoredSystem, ModelError, Problem, State, Var,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AugmentError {
    #[error("counter value {value} is not representable in {width} bits")]
    CounterRange { value: u64, width: u32 },
    #[error("augmented action at counter {index} with cost {cost} exceeds budget {budget}")]
    BudgetOverflow { index: u64, cost: u64, budget: u64 },
    #[error(transparent)]
    Cost(#[from] ModelError),
    #[error("problem fails validation: {}", format_defects(.0))]
    InvalidProblem(Vec<Defect>),
}

fn format_defects(defects: &[Defect]) -> String {
    defects
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// The fresh counter variables for a budget `C`.
///
/// Width is `⌈log2(C+1)⌉` so that every value `0 ≤ i ≤ C` is representable,
/// including `i = C` when `C` is a power of two. Bit order is fixed with
/// the first variable least significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterSpec {
    budget: u64,
    width: u32,
    vars: Vec<Var>,
}

impl CounterSpec {
    /// Allocates counter variables disjoint from `taken`.
    pub fn new(budget: u64, taken: &std::collections::BTreeSet<Var>) -> CounterSpec {
        let width = if budget == 0 {
            0
        } else {
            64 - budget.leading_zeros()
        };
        let vars = (1..=width)
            .map(|i| {
                let mut name = format!("#u{i}");
                while taken.contains(&Var::new(name.clone())) {
                    name.insert(0, '#');
                }
                Var::new(name)
            })
            .collect();
        CounterSpec {
            budget,
            width,
            vars,
        }
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    /// The full assignment of the counter variables encoding `i`,
    /// least-significant bit first.
    pub fn counter_state(&self, i: u64) -> Result<State, AugmentError> {
        if self.width < 64 && i >= 1u64 << self.width {
            return Err(AugmentError::CounterRange {
                value: i,
                width: self.width,
            });
        }
        Ok(State::from_pairs(
            self.vars
                .iter()
                .enumerate()
                .map(|(bit, v)| (v.clone(), i & (1 << bit) != 0)),
        ))
    }

    /// Reads the counter value out of a state; `None` if any counter bit is
    /// unassigned.
    pub fn decode_counter(&self, s: &State) -> Option<u64> {
        let mut value = 0u64;
        for (bit, v) in self.vars.iter().enumerate() {
            if s.get(v)? {
                value |= 1 << bit;
            }
        }
        Some(value)
    }
}

/// The augmented copy of `a` at counter value `i` with cost `c`:
/// `(pre ⊎ s_i, eff ⊎ s_{i+c})`.
pub fn augment_action(
    a: &Action,
    i: u64,
    c: u64,
    spec: &CounterSpec,
) -> Result<Action, AugmentError> {
    if i + c > spec.budget() {
        return Err(AugmentError::BudgetOverflow {
            index: i,
            cost: c,
            budget: spec.budget(),
        });
    }
    let pre = a.pre().union(&spec.counter_state(i)?);
    let eff = a.eff().union(&spec.counter_state(i + c)?);
    Ok(match a.label() {
        Some(l) => Action::with_label(pre, eff, format!("{l}@{i}")),
        None => Action::new(pre, eff),
    })
}

/// The augmented system for budget `C`: every action of cost `c`
/// contributes copies at counter values `0 ..= C − c` (none when `c > C`).
pub fn augment_system(
    sys: &FactoredSystem,
    costs: &CostMap,
    budget: u64,
) -> Result<(FactoredSystem, CounterSpec), AugmentError> {
    let spec = CounterSpec::new(budget, sys.vars());
    let mut augmented = Vec::new();
    for a in sys.actions() {
        let c = costs
            .get(a)
            .ok_or_else(|| ModelError::MissingCost(a.display_name()))?;
        if c > budget {
            continue;
        }
        for i in 0..=budget - c {
            augmented.push(augment_action(a, i, c, &spec)?);
        }
    }
    let vars = sys.vars().iter().cloned().chain(spec.vars().iter().cloned());
    Ok((FactoredSystem::with_vars(augmented, vars), spec))
}

/// A problem with its cost-bounded augmentation and the bookkeeping to map
/// augmented actions back to base actions.
#[derive(Debug, Clone)]
pub struct AugmentedProblem {
    pub base: Problem,
    pub spec: CounterSpec,
    pub augmented: Problem,
    /// Augmented action → (base action, counter value it fires at).
    pub origin: BTreeMap<Action, (Action, u64)>,
}

/// Builds the augmented problem for budget `C`: augmented system, the same
/// goal, and the initial state extended with a zeroed counter.
pub fn augment_problem(prob: &Problem, budget: u64) -> Result<AugmentedProblem, AugmentError> {
    let defects = validate_problem(prob);
    if !defects.is_empty() {
        return Err(AugmentError::InvalidProblem(defects));
    }
    let (system, spec) = augment_system(&prob.system, &prob.costs, budget)?;

    let mut origin = BTreeMap::new();
    let mut costs = CostMap::new();
    for a in prob.system.actions() {
        let c = prob.costs.get(a).expect("validated total cost map");
        if c > budget {
            continue;
        }
        for i in 0..=budget - c {
            let aug = augment_action(a, i, c, &spec)?;
            origin.insert(aug.clone(), (a.clone(), i));
            costs.insert(aug, c);
        }
    }

    let init = prob.init.union(&spec.counter_state(0)?);
    let augmented = Problem::new(system, costs, init, prob.goal.clone());
    Ok(AugmentedProblem {
        base: prob.clone(),
        spec,
        augmented,
        origin,
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The gcd of all action costs, with zeros ignored; 1 when every cost is 0
/// or there are no actions.
pub fn cost_gcd(prob: &Problem) -> u64 {
    let g = prob.costs.iter().fold(0u64, |acc, (_, c)| gcd(acc, c));
    if g == 0 {
        1
    } else {
        g
    }
}

/// Divides every cost by the cost gcd. Solutions and their relative cost
/// order are untouched; absolute costs shrink by the returned factor.
pub fn scale_problem(prob: &Problem) -> (Problem, u64) {
    let g = cost_gcd(prob);
    let scaled = Problem::new(
        prob.system.clone(),
        prob.costs.map_costs(|c| c / g),
        prob.init.clone(),
        prob.goal.clone(),
    );
    (scaled, g)
}

/// Greedy action factoring to a fixed point: two actions with identical
/// effects whose preconditions differ on exactly one variable merge into
/// one action without that precondition. The variable universe is kept, so
/// factored systems stay compatible with the original problem's states.
pub fn factor_actions(sys: &FactoredSystem) -> FactoredSystem {
    let vars: Vec<Var> = sys.vars().iter().cloned().collect();
    let mut actions: std::collections::BTreeSet<Action> = sys.actions().cloned().collect();
    loop {
        let mut merge: Option<(Action, Action, Action)> = None;
        'scan: for a in &actions {
            for (v, b) in a.pre().iter() {
                let mut flipped = a.pre().clone();
                flipped.set(v.clone(), !b);
                let partner = actions
                    .iter()
                    .find(|p| *p != a && p.pre() == &flipped && p.eff() == a.eff());
                if let Some(p) = partner {
                    let mut pre = a.pre().clone();
                    pre.remove(v);
                    let merged = match merged_label(a, p) {
                        Some(l) => Action::with_label(pre, a.eff().clone(), l),
                        None => Action::new(pre, a.eff().clone()),
                    };
                    merge = Some((a.clone(), p.clone(), merged));
                    break 'scan;
                }
            }
        }
        match merge {
            Some((a, b, merged)) => {
                actions.remove(&a);
                actions.remove(&b);
                actions.insert(merged);
            }
            None => break,
        }
    }
    FactoredSystem::with_vars(actions, vars)
}

fn merged_label(a: &Action, b: &Action) -> Option<String> {
    match (a.label(), b.label()) {
        (Some(x), Some(y)) => {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            Some(format!("{lo}|{hi}"))
        }
        (Some(x), None) | (None, Some(x)) => Some(x.to_string()),
        (None, None) => None,
    }
}
