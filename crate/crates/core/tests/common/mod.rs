//! Shared brute-force oracles for the integration suites. These
//! deliberately re-derive everything from the public model semantics —
//! symbolic states, no bitmask engine — so they share no code with the
//! implementation paths they check.

use std::collections::BTreeMap;

use costsat::model::{execute_action, Plan, Problem, State};
use costsat::sat::Cnf;

/// Satisfiability by explicit truth-table enumeration.
pub fn truth_table_sat(cnf: &Cnf) -> bool {
    let n = cnf.var_count();
    assert!(n <= 24, "truth table oracle wants small formulas");
    'assignment: for bits in 0u64..(1u64 << n) {
        for clause in cnf.clauses() {
            let satisfied = clause.lits().iter().any(|l| {
                let value = bits & (1 << (l.var() - 1)) != 0;
                value == l.is_positive()
            });
            if !satisfied {
                continue 'assignment;
            }
        }
        return true;
    }
    n == 0 && cnf.clause_count() == 0
}

/// Cheapest plan cost per exact length, by exhaustive forward search with
/// symbolic states. `layers[k]` maps states reachable in exactly `k`
/// applied steps to the minimal cost of reaching them.
pub fn min_cost_layers(prob: &Problem, max_len: usize) -> Vec<BTreeMap<State, u64>> {
    let mut layers = Vec::with_capacity(max_len + 1);
    let mut current = BTreeMap::from([(prob.init.clone(), 0u64)]);
    layers.push(current.clone());
    for _ in 0..max_len {
        let mut next: BTreeMap<State, u64> = BTreeMap::new();
        for (state, cost) in &current {
            for action in prob.system.actions() {
                if !action.pre().contained_in(state) {
                    continue;
                }
                let succ = execute_action(state, action);
                let c = cost + prob.costs.get(action).expect("total cost map");
                match next.get(&succ) {
                    Some(&old) if old <= c => {}
                    _ => {
                        next.insert(succ, c);
                    }
                }
            }
        }
        layers.push(next.clone());
        current = next;
    }
    layers
}

/// Total cost of a plan under a problem's cost map.
pub fn cost_of(prob: &Problem, plan: &Plan) -> u64 {
    costsat::model::plan_cost(&prob.costs, plan).expect("plan actions carry costs")
}
