//! Bounded-horizon sequential propositional encoding of planning problems,
//! model decoding, and DIMACS emission.
//!
//! The CNF is satisfiable iff the problem has a solution of length at most
//! the horizon. At most one action fires per step and empty steps are
//! allowed, so no padding no-op action is ever needed. An action variable
//! asserts executability: preconditions are required, not no-op'd — a plan
//! with inapplicable steps always has a no-longer, no-costlier subsequence
//! without them, so nothing is lost.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::{Action, Plan, Problem, State, Var};
use crate::sat::{Cnf, Lit, Model};

pub use crate::sat::dimacs::emit_dimacs;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("encoding needs ≤ {max} propositional variables, got {got}")]
    TooManyVariables { got: u64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("model asserts {count} actions at step {step}; the at-most-one constraint is broken")]
    MultipleActionsAtStep { step: u64, count: usize },
    #[error("decoded action `{action}` has no origin entry")]
    UnmappedAction { action: String },
}

/// How the at-most-one-action-per-step constraint is clausified.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmoEncoding {
    /// Pairwise exclusions: quadratic in the action count, zero overhead
    /// otherwise. The default at desk scale.
    #[default]
    Pairwise,
    /// Sequential-counter encoding: linear clauses with auxiliary
    /// variables, for large action sets.
    SequentialCounter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    pub amo: AmoEncoding,
}

/// Bookkeeping from encoding variables back to the plan space.
#[derive(Debug, Clone)]
pub struct EncodingMeta {
    pub horizon: u64,
    /// `(timestep 0..=h, state variable) → CNF variable`.
    pub state_index: BTreeMap<(u64, Var), u32>,
    /// `(timestep 0..h, action) → CNF variable`.
    pub action_index: BTreeMap<(u64, Action), u32>,
}

impl EncodingMeta {
    pub fn state_var(&self, step: u64, v: &Var) -> Option<u32> {
        self.state_index.get(&(step, v.clone())).copied()
    }

    pub fn action_var(&self, step: u64, a: &Action) -> Option<u32> {
        self.action_index.get(&(step, a.clone())).copied()
    }
}

/// Sequential encoding of `prob` up to `horizon` steps.
///
/// Clause groups: initial-state units at step 0, goal units at the
/// horizon, at-most-one action per step, action-implies-precondition and
/// action-implies-effect links, and positive/negative frame axioms (a
/// variable flips between steps only if a fired action's effect sets it —
/// which also freezes the state across empty steps).
pub fn encode_bounded(
    prob: &Problem,
    horizon: u64,
    opts: &EncodeOptions,
) -> Result<(Cnf, EncodingMeta), EncodeError> {
    // The variable universe: the system's plus anything init/goal mention,
    // so internally factored systems keep their full universe.
    let mut universe: Vec<Var> = prob.system.vars().iter().cloned().collect();
    universe.extend(prob.init.domain().cloned());
    universe.extend(prob.goal.domain().cloned());
    universe.sort();
    universe.dedup();

    let actions: Vec<Action> = prob.system.actions().cloned().collect();
    let state_var_count = (horizon + 1) * universe.len() as u64;
    let action_var_count = horizon * actions.len() as u64;
    let total = state_var_count + action_var_count;
    if total > u32::MAX as u64 / 2 {
        return Err(EncodeError::TooManyVariables {
            got: total,
            max: u32::MAX as u64 / 2,
        });
    }

    let mut state_index = BTreeMap::new();
    let mut next = 1u32;
    for t in 0..=horizon {
        for v in &universe {
            state_index.insert((t, v.clone()), next);
            next += 1;
        }
    }
    let mut action_index = BTreeMap::new();
    for t in 0..horizon {
        for a in &actions {
            action_index.insert((t, a.clone()), next);
            next += 1;
        }
    }

    let meta = EncodingMeta {
        horizon,
        state_index,
        action_index,
    };
    let mut cnf = Cnf::new(next - 1);

    let state_lit = |meta: &EncodingMeta, t: u64, v: &Var, positive: bool| {
        Lit::new(meta.state_var(t, v).expect("universe covers v"), positive)
    };

    // Initial state at step 0 and goal at the horizon.
    for (v, b) in prob.init.iter() {
        cnf.add_clause([state_lit(&meta, 0, v, b)]);
    }
    for (v, b) in prob.goal.iter() {
        cnf.add_clause([state_lit(&meta, horizon, v, b)]);
    }

    for t in 0..horizon {
        let action_vars: Vec<u32> = actions
            .iter()
            .map(|a| meta.action_var(t, a).expect("indexed"))
            .collect();

        match opts.amo {
            AmoEncoding::Pairwise => {
                for i in 0..action_vars.len() {
                    for j in i + 1..action_vars.len() {
                        cnf.add_clause([
                            Lit::new(action_vars[i], false),
                            Lit::new(action_vars[j], false),
                        ]);
                    }
                }
            }
            AmoEncoding::SequentialCounter => {
                amo_sequential(&mut cnf, &action_vars);
            }
        }

        for (a, &av) in actions.iter().zip(&action_vars) {
            for (v, b) in a.pre().iter() {
                cnf.add_clause([Lit::new(av, false), state_lit(&meta, t, v, b)]);
            }
            for (v, b) in a.eff().iter() {
                cnf.add_clause([Lit::new(av, false), state_lit(&meta, t + 1, v, b)]);
            }
        }

        // Frame axioms: each flip needs a supporting effect.
        for v in &universe {
            for polarity in [true, false] {
                let mut clause = vec![
                    state_lit(&meta, t, v, !polarity).negated(),
                    state_lit(&meta, t + 1, v, polarity).negated(),
                ];
                for (a, &av) in actions.iter().zip(&action_vars) {
                    if a.eff().get(v) == Some(polarity) {
                        clause.push(Lit::new(av, true));
                    }
                }
                cnf.add_clause(clause);
            }
        }
    }

    Ok((cnf, meta))
}

/// Sinz-style sequential-counter at-most-one over `vars`.
fn amo_sequential(cnf: &mut Cnf, vars: &[u32]) {
    let n = vars.len();
    if n <= 1 {
        return;
    }
    let registers: Vec<u32> = (0..n - 1).map(|_| cnf.fresh_var()).collect();
    cnf.add_clause([Lit::new(vars[0], false), Lit::new(registers[0], true)]);
    cnf.add_clause([
        Lit::new(vars[n - 1], false),
        Lit::new(registers[n - 2], false),
    ]);
    for i in 1..n - 1 {
        cnf.add_clause([Lit::new(vars[i], false), Lit::new(registers[i], true)]);
        cnf.add_clause([
            Lit::new(registers[i - 1], false),
            Lit::new(registers[i], true),
        ]);
        cnf.add_clause([
            Lit::new(vars[i], false),
            Lit::new(registers[i - 1], false),
        ]);
    }
}

/// Reads the plan out of a satisfying model: per step the at-most-one
/// fired action, empty steps skipped. With an origin map, every encoded
/// action is replaced by its base action.
pub fn decode_plan(
    model: &Model,
    meta: &EncodingMeta,
    origin: Option<&BTreeMap<Action, (Action, u64)>>,
) -> Result<Plan, DecodeError> {
    let mut steps = Vec::new();
    for t in 0..meta.horizon {
        let fired: Vec<&Action> = meta
            .action_index
            .range((t, Action::new(State::new(), State::new()))..)
            .take_while(|((step, _), _)| *step == t)
            .filter(|(_, &var)| model.value(var))
            .map(|((_, a), _)| a)
            .collect();
        match fired.len() {
            0 => {}
            1 => {
                let a = fired[0];
                match origin {
                    Some(map) => {
                        let (base, _) =
                            map.get(a).ok_or_else(|| DecodeError::UnmappedAction {
                                action: a.display_name(),
                            })?;
                        steps.push(base.clone());
                    }
                    None => steps.push(a.clone()),
                }
            }
            n => {
                return Err(DecodeError::MultipleActionsAtStep { step: t, count: n });
            }
        }
    }
    Ok(Plan::new(steps))
}

/// Sidecar metadata mapping CNF variables to timestep/state-variable and
/// timestep/action pairs, for decoding external solver output.
#[derive(Debug, Clone, Serialize)]
pub struct MetadataFile {
    pub horizon: u64,
    pub variable_count: u32,
    pub state_vars: Vec<StateVarEntry>,
    pub action_vars: Vec<ActionVarEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateVarEntry {
    pub index: u32,
    pub step: u64,
    pub var: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionVarEntry {
    pub index: u32,
    pub step: u64,
    pub action: String,
}

pub fn metadata_file(meta: &EncodingMeta, cnf: &Cnf) -> MetadataFile {
    MetadataFile {
        horizon: meta.horizon,
        variable_count: cnf.var_count(),
        state_vars: meta
            .state_index
            .iter()
            .map(|((step, v), &index)| StateVarEntry {
                index,
                step: *step,
                var: v.name().to_string(),
            })
            .collect(),
        action_vars: meta
            .action_index
            .iter()
            .map(|((step, a), &index)| ActionVarEntry {
                index,
                step: *step,
                action: a.display_name(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::augment_problem;
    use crate::model::is_solution;
    use crate::oracles;
    use crate::sat::{solve_cnf, Budget, SolveResult};
    use crate::testutil::{clique_problem, expensive_shortcut_problem};

    fn solve(prob: &Problem, horizon: u64, opts: &EncodeOptions) -> Option<Plan> {
        let (cnf, meta) = encode_bounded(prob, horizon, opts).unwrap();
        match solve_cnf(&cnf, Budget::UNLIMITED) {
            SolveResult::Sat(model) => Some(decode_plan(&model, &meta, None).unwrap()),
            SolveResult::Unsat => None,
            SolveResult::Unknown(r) => panic!("unexpected unknown: {r}"),
        }
    }

    #[test]
    fn clique_at_horizon_one_yields_the_direct_plan() {
        let prob = clique_problem();
        let plan = solve(&prob, 1, &EncodeOptions::default()).expect("satisfiable");
        assert!(is_solution(&prob, &plan));
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.steps()[0].label(), Some("pi1"));

        assert!(solve(&prob, 0, &EncodeOptions::default()).is_none(), "init differs from goal");
    }

    #[test]
    fn starved_budget_is_unsatisfiable_at_any_horizon() {
        // Cheapest solution costs 2, so the budget-1 augmentation has no
        // plan at all; horizon 3 leaves room to be wrong.
        let prob = expensive_shortcut_problem();
        let ap = augment_problem(&prob, 1).unwrap();
        assert!(solve(&ap.augmented, 3, &EncodeOptions::default()).is_none());
    }

    #[test]
    fn augmented_solve_decodes_to_base_actions() {
        let prob = expensive_shortcut_problem();
        let ap = augment_problem(&prob, 2).unwrap();
        let (cnf, meta) = encode_bounded(&ap.augmented, 2, &EncodeOptions::default()).unwrap();
        match solve_cnf(&cnf, Budget::UNLIMITED) {
            SolveResult::Sat(model) => {
                let plan = decode_plan(&model, &meta, Some(&ap.origin)).unwrap();
                assert!(is_solution(&prob, &plan));
                assert_eq!(crate::model::plan_cost(&prob.costs, &plan).unwrap(), 2);
                let labels: Vec<_> = plan.iter().map(|a| a.label().unwrap()).collect();
                assert_eq!(labels, ["pi1", "pi2"]);
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn decoding_rejects_models_with_doubled_steps() {
        let prob = clique_problem();
        let (cnf, meta) = encode_bounded(&prob, 1, &EncodeOptions::default()).unwrap();
        // Hand-build a bogus model asserting two actions at step 0.
        let mut values = vec![false; cnf.var_count() as usize];
        let mut firing = 0;
        for ((_, _), &v) in meta.action_index.iter().take(2) {
            values[(v - 1) as usize] = true;
            firing += 1;
        }
        assert_eq!(firing, 2);
        let err = decode_plan(&Model::new(values), &meta, None).unwrap_err();
        assert!(matches!(err, DecodeError::MultipleActionsAtStep { step: 0, count: 2 }));
    }

    #[test]
    fn empty_model_decodes_to_the_empty_plan() {
        let prob = clique_problem();
        let (cnf, meta) = encode_bounded(&prob, 2, &EncodeOptions::default()).unwrap();
        let model = Model::new(vec![false; cnf.var_count() as usize]);
        assert!(decode_plan(&model, &meta, None).unwrap().is_empty());
    }

    #[test]
    fn satisfiability_matches_exhaustive_reachability() {
        for seed in 0..80 {
            let spec = crate::genrand::GenSpec {
                var_count: (1, 3),
                action_count: (1, 4),
                seed,
                ..Default::default()
            };
            let prob = crate::genrand::gen_problem(&spec);
            let c = oracles::compiled(&prob.system);
            let start = c.encode_full_state(&prob.init).unwrap();
            let (gm, gv) = c.encode_partial_state(&prob.goal).unwrap();
            let layers = oracles::reach_by_length(&c, start, 4);
            for horizon in 0..=4u64 {
                let expected = (0..=horizon as usize).any(|k| {
                    (0..c.state_count() as u64).any(|s| s & gm == gv && layers[k][s as usize])
                });
                let got = solve(&prob, horizon, &EncodeOptions::default());
                assert_eq!(
                    got.is_some(),
                    expected,
                    "divergence at seed {seed}, horizon {horizon}"
                );
                if let Some(plan) = got {
                    assert!(is_solution(&prob, &plan), "unsound plan at seed {seed}");
                    assert!(plan.len() as u64 <= horizon);
                }
            }
        }
    }

    #[test]
    fn satisfiability_is_monotone_in_the_horizon() {
        for seed in 0..40 {
            let spec = crate::genrand::GenSpec::default().with_seed(seed);
            let prob = crate::genrand::gen_problem(&spec);
            let mut seen_sat = false;
            for horizon in 0..=5u64 {
                let sat = solve(&prob, horizon, &EncodeOptions::default()).is_some();
                assert!(!seen_sat || sat, "satisfiability lost at seed {seed}, h {horizon}");
                seen_sat |= sat;
            }
            assert!(seen_sat, "generated problems are solvable");
        }
    }

    #[test]
    fn sequential_counter_agrees_with_pairwise() {
        let opts_seq = EncodeOptions {
            amo: AmoEncoding::SequentialCounter,
        };
        for seed in 0..40 {
            let spec = crate::genrand::GenSpec::default().with_seed(seed);
            let prob = crate::genrand::gen_problem(&spec);
            for horizon in 0..=3u64 {
                let pairwise = solve(&prob, horizon, &EncodeOptions::default());
                let sequential = solve(&prob, horizon, &opts_seq);
                assert_eq!(pairwise.is_some(), sequential.is_some());
                if let Some(plan) = sequential {
                    assert!(is_solution(&prob, &plan));
                }
            }
        }
    }

    #[test]
    fn clause_count_stays_polynomial() {
        // init + goal ≤ 2V; per step: pairwise at-most-one ≤ A², links ≤
        // 2AV, frames = 2V.
        for seed in 0..30 {
            let prob = crate::genrand::gen_problem(
                &crate::genrand::GenSpec::default().with_seed(seed),
            );
            let a = prob.system.action_count();
            let v = prob.system.var_count();
            for h in 0..=4usize {
                let (cnf, _) = encode_bounded(&prob, h as u64, &EncodeOptions::default()).unwrap();
                let bound = 2 * v + h * (a * a + 2 * a * v + 2 * v);
                assert!(
                    cnf.clause_count() <= bound,
                    "seed {seed}, h {h}: {} clauses exceed the bound {bound}",
                    cnf.clause_count()
                );
            }
        }
    }

    #[test]
    fn decode_with_origin_rejects_unmapped_actions() {
        let prob = clique_problem();
        let (cnf, meta) = encode_bounded(&prob, 1, &EncodeOptions::default()).unwrap();
        match solve_cnf(&cnf, Budget::UNLIMITED) {
            SolveResult::Sat(model) => {
                let empty_origin = std::collections::BTreeMap::new();
                let err = decode_plan(&model, &meta, Some(&empty_origin)).unwrap_err();
                assert!(matches!(err, DecodeError::UnmappedAction { .. }));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn metadata_lists_every_variable_once() {
        let prob = clique_problem();
        let (cnf, meta) = encode_bounded(&prob, 2, &EncodeOptions::default()).unwrap();
        let file = metadata_file(&meta, &cnf);
        let mut seen = std::collections::BTreeSet::new();
        for e in &file.state_vars {
            assert!(seen.insert(e.index));
        }
        for e in &file.action_vars {
            assert!(seen.insert(e.index));
        }
        assert_eq!(seen.len() as u64, 3 * 2 + 2 * 4, "3 steps of 2 vars, 2 steps of 4 actions");
        assert!(*seen.iter().max().unwrap() <= cnf.var_count());
    }
}
