//! Random instance generation for property-based testing.
//!
//! Generation is a pure function of the seed. Goals are produced by
//! executing a random action sequence from the initial state, so generated
//! problems are solvable by construction; an unsolvable variant searches
//! for a goal no reachable state satisfies.

use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Action, CostMap, FactoredSystem, Plan, Problem, State, Var};
use crate::space::Compiled;

/// Cost regimes. The three branches of the completeness-threshold rule
/// (all-unit, no-zero, with-zero) each get a dedicated mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CostMode {
    AllUnit,
    NoZero { min: u64, max: u64 },
    WithZero { zero_prob: f64, max: u64 },
}

/// Parameters for random system/problem generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    /// Inclusive variable-count range.
    pub var_count: (usize, usize),
    /// Inclusive action-count range.
    pub action_count: (usize, usize),
    pub cost_mode: CostMode,
    /// Probability that a variable is constrained by a precondition.
    pub pre_density: f64,
    /// Probability that a variable is set by an effect.
    pub eff_density: f64,
    /// Inclusive length range of the random walk whose end state induces
    /// the goal.
    pub goal_walk: (usize, usize),
    /// Probability of keeping each variable when projecting the walk's end
    /// state down to a goal.
    pub goal_density: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            var_count: (2, 4),
            action_count: (1, 6),
            cost_mode: CostMode::WithZero {
                zero_prob: 0.2,
                max: 3,
            },
            pre_density: 0.4,
            eff_density: 0.6,
            goal_walk: (0, 4),
            goal_density: 0.8,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn range(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

fn gen_partial(vars: &[Var], density: f64, rng: &mut ChaCha8Rng) -> State {
    let mut s = State::new();
    for v in vars {
        if rng.random_bool(density) {
            s.set(v.clone(), rng.random_bool(0.5));
        }
    }
    s
}

fn gen_system_with(spec: &GenSpec, rng: &mut ChaCha8Rng) -> FactoredSystem {
    let n = range(rng, spec.var_count);
    let vars: Vec<Var> = (1..=n).map(|i| Var::new(format!("v{i}"))).collect();
    let count = range(rng, spec.action_count);
    let actions: Vec<Action> = (1..=count)
        .map(|i| {
            let pre = gen_partial(&vars, spec.pre_density, rng);
            let eff = gen_partial(&vars, spec.eff_density, rng);
            Action::with_label(pre, eff, format!("a{i}"))
        })
        .collect();
    FactoredSystem::with_vars(actions, vars)
}

fn gen_costs_with(
    sys: &FactoredSystem,
    mode: CostMode,
    rng: &mut ChaCha8Rng,
) -> CostMap {
    // Structurally equal actions must agree on cost or the validator flags
    // the problem, so draw one cost per (pre, eff) shape.
    let mut by_shape: std::collections::BTreeMap<(State, State), u64> =
        std::collections::BTreeMap::new();
    CostMap::from_pairs(sys.actions().map(|a| {
        let c = *by_shape
            .entry((a.pre().clone(), a.eff().clone()))
            .or_insert_with(|| match mode {
                CostMode::AllUnit => 1,
                CostMode::NoZero { min, max } => rng.random_range(min.max(1)..=max.max(1)),
                CostMode::WithZero { zero_prob, max } => {
                    if rng.random_bool(zero_prob) {
                        0
                    } else {
                        rng.random_range(1..=max.max(1))
                    }
                }
            });
        (a.clone(), c)
    }))
}

/// Deterministic random system for the given spec.
pub fn gen_system(spec: &GenSpec) -> FactoredSystem {
    gen_system_with(spec, &mut spec.rng())
}

/// Deterministic random problem: solvable by construction, always passing
/// `validate_problem`.
pub fn gen_problem(spec: &GenSpec) -> Problem {
    let mut rng = spec.rng();
    let sys = gen_system_with(spec, &mut rng);
    let costs = gen_costs_with(&sys, spec.cost_mode, &mut rng);
    let init = full_random_state(&sys, &mut rng);
    let walk = random_plan(&sys, spec.goal_walk.0..=spec.goal_walk.1, &mut rng);
    let end = crate::model::execute_sequence(&init, &walk);
    let mut goal = State::new();
    for (v, b) in end.iter() {
        if rng.random_bool(spec.goal_density) {
            goal.set(v.clone(), b);
        }
    }
    Problem::new(sys, costs, init, goal)
}

/// Random problem whose goal no reachable state satisfies, or `None` when
/// every full assignment is reachable from the generated init.
pub fn gen_unsolvable_problem(spec: &GenSpec) -> Option<Problem> {
    let mut prob = gen_problem(spec);
    let compiled = Compiled::compile(&prob.system).ok()?;
    let start = compiled.encode_full_state(&prob.init)?;
    let reachable = compiled.reachable_from(start);
    let unreachable = (0..compiled.state_count() as u64)
        .find(|&s| !reachable[s as usize])?;
    prob.goal = compiled.decode_state(unreachable);
    Some(prob)
}

/// A total random assignment over the system universe.
pub fn full_random_state(sys: &FactoredSystem, rng: &mut ChaCha8Rng) -> State {
    State::from_pairs(sys.vars().iter().map(|v| (v.clone(), rng.random_bool(0.5))))
}

/// A random partial state over the system universe (density 1/2).
pub fn random_partial_state(sys: &FactoredSystem, rng: &mut ChaCha8Rng) -> State {
    let vars: Vec<Var> = sys.vars().iter().cloned().collect();
    gen_partial(&vars, 0.5, rng)
}

/// Uniform random action sequence with length drawn from `len`. Steps may
/// be inapplicable (no-ops) by design.
pub fn random_plan(
    sys: &FactoredSystem,
    len: RangeInclusive<usize>,
    rng: &mut ChaCha8Rng,
) -> Plan {
    let actions: Vec<Action> = sys.actions().cloned().collect();
    if actions.is_empty() {
        return Plan::empty();
    }
    let n = rng.random_range(len);
    (0..n)
        .map(|_| actions[rng.random_range(0..actions.len())].clone())
        .collect()
}

/// Parameters for random CNF generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnfSpec {
    /// Inclusive variable-count range.
    pub var_count: (usize, usize),
    /// Clauses per variable; around 4.3 mixes SAT and UNSAT 3-CNFs.
    pub clause_factor: f64,
    /// Inclusive literal-count range per clause.
    pub clause_len: (usize, usize),
    pub seed: u64,
}

impl Default for CnfSpec {
    fn default() -> Self {
        CnfSpec {
            var_count: (1, 20),
            clause_factor: 4.2,
            clause_len: (1, 3),
            seed: 0,
        }
    }
}

/// Deterministic random CNF. Tautological draws are dropped by clause
/// normalization, so the realized clause count may be slightly lower.
pub fn gen_cnf(spec: &CnfSpec) -> crate::sat::Cnf {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = range(&mut rng, spec.var_count).max(1);
    let clause_count = ((n as f64) * spec.clause_factor).round() as usize;
    let mut cnf = crate::sat::Cnf::new(n as u32);
    for _ in 0..clause_count {
        let len = range(&mut rng, spec.clause_len).clamp(1, n);
        let lits = (0..len).map(|_| {
            crate::sat::Lit::new(
                rng.random_range(1..=n as u32),
                rng.random_bool(0.5),
            )
        });
        cnf.add_clause(lits);
    }
    cnf
}

/// Greedy structural shrinking: repeatedly drops actions, then variables,
/// as long as `fails` keeps holding, to produce a smaller failing instance
/// for debugging. `fails(&prob)` must be true on entry.
pub fn shrink_problem(prob: &Problem, fails: impl Fn(&Problem) -> bool) -> Problem {
    let mut current = prob.clone();
    debug_assert!(fails(&current));
    loop {
        let mut shrunk = false;

        let actions: Vec<Action> = current.system.actions().cloned().collect();
        for a in &actions {
            let candidate = drop_action(&current, a);
            if fails(&candidate) {
                current = candidate;
                shrunk = true;
                break;
            }
        }
        if shrunk {
            continue;
        }

        let vars: Vec<Var> = current.system.vars().iter().cloned().collect();
        for v in &vars {
            let candidate = drop_var(&current, v);
            if fails(&candidate) {
                current = candidate;
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            return current;
        }
    }
}

fn drop_action(prob: &Problem, gone: &Action) -> Problem {
    let actions: Vec<Action> = prob
        .system
        .actions()
        .filter(|a| *a != gone)
        .cloned()
        .collect();
    let system = FactoredSystem::with_vars(actions, prob.system.vars().iter().cloned());
    let costs = CostMap::from_pairs(
        prob.costs
            .iter()
            .filter(|(a, _)| *a != gone)
            .map(|(a, c)| (a.clone(), c)),
    );
    Problem::new(system, costs, prob.init.clone(), prob.goal.clone())
}

fn drop_var(prob: &Problem, gone: &Var) -> Problem {
    let keep: std::collections::BTreeSet<Var> = prob
        .system
        .vars()
        .iter()
        .filter(|v| *v != gone)
        .cloned()
        .collect();
    let relabel: Vec<(Action, Action)> = prob
        .system
        .actions()
        .map(|a| {
            let projected = match a.label() {
                Some(l) => Action::with_label(a.pre().project(&keep), a.eff().project(&keep), l),
                None => Action::new(a.pre().project(&keep), a.eff().project(&keep)),
            };
            (a.clone(), projected)
        })
        .collect();
    let system =
        FactoredSystem::with_vars(relabel.iter().map(|(_, p)| p.clone()), keep.iter().cloned());
    let costs = CostMap::from_pairs(relabel.iter().filter_map(|(orig, projected)| {
        prob.costs.get(orig).map(|c| (projected.clone(), c))
    }));
    Problem::new(
        system,
        costs,
        prob.init.project(&keep),
        prob.goal.project(&keep),
    )
}
