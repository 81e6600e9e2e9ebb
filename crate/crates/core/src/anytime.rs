//! The any-time optimization loop: improve plan cost until an UNSAT answer
//! at the completeness-threshold horizon certifies optimality.
//!
//! Each round augments the (gcd-scaled) problem with the budget "current
//! cost minus one", factors the augmented actions, encodes to CNF at the
//! completeness threshold of the current plan, and solves. A model decodes
//! to a strictly cheaper verified plan; UNSAT proves no cheaper plan
//! exists at any length; an inconclusive solver answer ends the run with
//! the best plan so far, never with an optimality claim.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::augment::{augment_problem, factor_actions, scale_problem, AugmentError, AugmentedProblem};
use crate::encode::{
    decode_plan, emit_dimacs, encode_bounded, AmoEncoding, DecodeError, EncodeError, EncodeOptions,
};
use crate::hashutil::fnv1a64_hex;
use crate::model::{
    execute_action, is_solution, plan_cost, validate_problem, Defect, ModelError, Plan, Problem,
};
use crate::sat::{external::solve_external, solve_cnf, Budget, SolveResult, UnknownReason};
use crate::space::Compiled;
use crate::topology::{completeness_threshold, BoundMode, CtBranch, TopologyCaps, TopologyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnytimeError {
    #[error("problem fails validation: {0:?}")]
    InvalidProblem(Vec<Defect>),
    #[error("initial plan rejected: {0}")]
    InvalidInitialPlan(String),
    #[error("solver gave no answer: {0}")]
    BudgetExhausted(UnknownReason),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Cost(#[from] ModelError),
    #[error("state space too large for search: {0} variables exceed the cap {1}")]
    SearchCapExceeded(usize, usize),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

/// Which SAT solver executes the queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", content = "command")]
pub enum SolverChoice {
    Embedded,
    External(String),
}

/// Knobs for one optimization run.
#[derive(Debug, Clone, Serialize)]
pub struct SolveConfig {
    pub solver: SolverChoice,
    /// Per-solve resource budget.
    #[serde(skip)]
    pub solver_budget: Budget,
    /// Wall-clock budget for the whole optimization loop.
    #[serde(skip)]
    pub time_budget: Option<Duration>,
    pub amo: AmoEncoding,
    pub gcd_scaling: bool,
    pub factoring: bool,
    pub horizon_source: BoundMode,
    #[serde(skip)]
    pub caps: TopologyCaps,
    /// Recorded for reproducibility; the embedded solver is deterministic
    /// regardless.
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            solver: SolverChoice::Embedded,
            solver_budget: Budget::UNLIMITED,
            time_budget: None,
            amo: AmoEncoding::Pairwise,
            gcd_scaling: true,
            factoring: true,
            horizon_source: BoundMode::Exact,
            caps: TopologyCaps::default(),
            seed: 0,
        }
    }
}

/// One cost-bounded query: does `prob` have a solution of cost ≤
/// `cost_bound` within `horizon` steps?
///
/// `Ok(Some(plan))` carries a verified solution of cost within the bound;
/// `Ok(None)` means the CNF was proved unsatisfiable. An inconclusive
/// solver answer surfaces as [`AnytimeError::BudgetExhausted`].
pub fn solve_bounded(
    prob: &Problem,
    cost_bound: u64,
    horizon: u64,
    cfg: &SolveConfig,
) -> Result<Option<Plan>, AnytimeError> {
    Ok(solve_bounded_impl(prob, cost_bound, horizon, cfg)?.map(|(plan, _)| plan))
}

struct QueryStats {
    vars: u32,
    clauses: usize,
    cnf_hash: String,
}

fn solve_bounded_impl(
    prob: &Problem,
    cost_bound: u64,
    horizon: u64,
    cfg: &SolveConfig,
) -> Result<Option<(Plan, QueryStats)>, AnytimeError> {
    let defects = validate_problem(prob);
    if !defects.is_empty() {
        return Err(AnytimeError::InvalidProblem(defects));
    }
    let ap = augment_problem(prob, cost_bound)?;
    let enc_system = if cfg.factoring {
        factor_actions(&ap.augmented.system)
    } else {
        ap.augmented.system.clone()
    };
    let enc_problem = Problem::new(
        enc_system,
        ap.augmented.costs.clone(),
        ap.augmented.init.clone(),
        ap.augmented.goal.clone(),
    );
    let (cnf, meta) = encode_bounded(&enc_problem, horizon, &EncodeOptions { amo: cfg.amo })?;
    let stats = QueryStats {
        vars: cnf.var_count(),
        clauses: cnf.clause_count(),
        cnf_hash: fnv1a64_hex(emit_dimacs(&cnf).as_bytes()),
    };

    let result = match &cfg.solver {
        SolverChoice::Embedded => solve_cnf(&cnf, cfg.solver_budget),
        SolverChoice::External(cmd) => solve_external(&cnf, cmd, cfg.solver_budget),
    };

    match result {
        SolveResult::Sat(model) => {
            let encoded_plan = decode_plan(&model, &meta, None)?;
            let base = resolve_to_base(&encoded_plan, &ap)?;
            if !is_solution(prob, &base) {
                return Err(AnytimeError::Internal(
                    "decoded plan does not solve the problem".to_string(),
                ));
            }
            let cost = plan_cost(&prob.costs, &base)?;
            if cost > cost_bound {
                return Err(AnytimeError::Internal(format!(
                    "decoded plan costs {cost}, above the bound {cost_bound}"
                )));
            }
            Ok(Some((base, stats)))
        }
        SolveResult::Unsat => Ok(None),
        SolveResult::Unknown(reason) => Err(AnytimeError::BudgetExhausted(reason)),
    }
}

/// Maps a plan over the encoded (augmented, possibly factored) system back
/// to base actions by replaying it. A factored action resolves to any
/// augmented action with identical effects whose precondition holds at the
/// replay state; factoring guarantees one exists.
fn resolve_to_base(encoded: &Plan, ap: &AugmentedProblem) -> Result<Plan, AnytimeError> {
    let mut cur = ap.augmented.init.clone();
    let mut base_steps = Vec::with_capacity(encoded.len());
    for step in encoded.iter() {
        let augmented_action = if ap.origin.contains_key(step) {
            step.clone()
        } else {
            ap.augmented
                .system
                .actions()
                .find(|cand| cand.eff() == step.eff() && cand.pre().contained_in(&cur))
                .cloned()
                .ok_or_else(|| {
                    AnytimeError::Internal(format!(
                        "no augmented action matches factored step `{step}`"
                    ))
                })?
        };
        if !step.pre().contained_in(&cur) {
            return Err(AnytimeError::Internal(format!(
                "decoded step `{step}` is not applicable during replay"
            )));
        }
        let (base, _) = ap.origin.get(&augmented_action).ok_or_else(|| {
            AnytimeError::Internal(format!("origin map misses `{augmented_action}`"))
        })?;
        base_steps.push(base.clone());
        cur = execute_action(&cur, step);
    }
    Ok(Plan::new(base_steps))
}

/// One round of the optimization loop.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    /// Cost bound handed to the augmentation, in scaled units.
    pub cost_bound: u64,
    pub horizon: u64,
    pub ct_branch: CtBranch,
    pub cnf_vars: u32,
    pub cnf_clauses: usize,
    pub elapsed_seconds: f64,
    pub outcome: IterationOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IterationOutcome {
    /// A strictly cheaper plan, costs in original units.
    Improved {
        cost: u64,
        length: usize,
        plan: Vec<String>,
    },
    /// UNSAT: nothing cheaper exists and optimality is proven.
    ProvedOptimal,
    /// The solver gave up within its budget.
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// UNSAT at the completeness threshold, or a cost-0 plan in hand.
    Optimal,
    Timeout,
    Budget,
    SolverFailure,
}

/// The UNSAT answer that certifies optimality, re-checkable by re-encoding
/// with the same bound and horizon and comparing the formula hash.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnsatCertificate {
    pub cost_bound: u64,
    pub horizon: u64,
    pub cnf_hash: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationLog {
    pub initial_cost: u64,
    /// Divisor applied to all costs inside the loop (1 when scaling is
    /// off).
    pub gcd: u64,
    pub iterations: Vec<IterationRecord>,
    pub best_plan: Vec<String>,
    pub best_cost: u64,
    pub optimal_proven: bool,
    pub stop: StopReason,
    pub unsat_certificate: Option<UnsatCertificate>,
    #[serde(skip)]
    pub best: Plan,
}

/// Algorithm: keep solving for "strictly cheaper than the current plan"
/// with the cost bound scaled by the cost gcd and the horizon recomputed
/// from the current plan, until UNSAT (optimal) or resources run out.
/// Interrupting at any point still leaves a valid best plan.
pub fn optimize(
    prob: &Problem,
    initial: Plan,
    cfg: &SolveConfig,
) -> Result<OptimizationLog, AnytimeError> {
    let defects = validate_problem(prob);
    if !defects.is_empty() {
        return Err(AnytimeError::InvalidProblem(defects));
    }
    if !is_solution(prob, &initial) {
        return Err(AnytimeError::InvalidInitialPlan(
            "the supplied plan does not solve the problem".to_string(),
        ));
    }
    let initial_cost = plan_cost(&prob.costs, &initial)?;

    let (work, g) = if cfg.gcd_scaling {
        scale_problem(prob)
    } else {
        (prob.clone(), 1)
    };

    let started = Instant::now();
    let mut log = OptimizationLog {
        initial_cost,
        gcd: g,
        iterations: Vec::new(),
        best_plan: plan_names(&initial),
        best_cost: initial_cost,
        optimal_proven: false,
        stop: StopReason::Optimal,
        unsat_certificate: None,
        best: initial,
    };

    loop {
        if log.best_cost == 0 {
            // Costs are nonnegative; nothing can beat 0.
            log.optimal_proven = true;
            log.stop = StopReason::Optimal;
            return Ok(log);
        }
        let remaining = match cfg.time_budget {
            Some(limit) => {
                let spent = started.elapsed();
                if spent >= limit {
                    log.stop = StopReason::Timeout;
                    return Ok(log);
                }
                Some(limit - spent)
            }
            None => None,
        };

        let ct = completeness_threshold(prob, &log.best, cfg.horizon_source, &cfg.caps)?;
        let scaled_bound = (log.best_cost - 1) / g;

        let mut round_cfg = cfg.clone();
        round_cfg.solver_budget.time = match (cfg.solver_budget.time, remaining) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };

        let round_started = Instant::now();
        let outcome = solve_bounded_impl(&work, scaled_bound, ct.horizon, &round_cfg);
        let elapsed = round_started.elapsed().as_secs_f64();

        match outcome {
            Ok(Some((plan, stats))) => {
                let cost = plan_cost(&prob.costs, &plan)?;
                if cost >= log.best_cost {
                    return Err(AnytimeError::Internal(format!(
                        "bounded solve returned cost {cost}, not below {}",
                        log.best_cost
                    )));
                }
                log.iterations.push(IterationRecord {
                    cost_bound: scaled_bound,
                    horizon: ct.horizon,
                    ct_branch: ct.branch,
                    cnf_vars: stats.vars,
                    cnf_clauses: stats.clauses,
                    elapsed_seconds: elapsed,
                    outcome: IterationOutcome::Improved {
                        cost,
                        length: plan.len(),
                        plan: plan_names(&plan),
                    },
                });
                log.best_cost = cost;
                log.best_plan = plan_names(&plan);
                log.best = plan;
            }
            Ok(None) => {
                // Reconstruct the formula hash for the certificate.
                let stats = certificate_stats(&work, scaled_bound, ct.horizon, cfg)?;
                log.iterations.push(IterationRecord {
                    cost_bound: scaled_bound,
                    horizon: ct.horizon,
                    ct_branch: ct.branch,
                    cnf_vars: stats.vars,
                    cnf_clauses: stats.clauses,
                    elapsed_seconds: elapsed,
                    outcome: IterationOutcome::ProvedOptimal,
                });
                log.optimal_proven = true;
                log.stop = StopReason::Optimal;
                log.unsat_certificate = Some(UnsatCertificate {
                    cost_bound: scaled_bound,
                    horizon: ct.horizon,
                    cnf_hash: stats.cnf_hash,
                });
                return Ok(log);
            }
            Err(AnytimeError::BudgetExhausted(reason)) => {
                log.iterations.push(IterationRecord {
                    cost_bound: scaled_bound,
                    horizon: ct.horizon,
                    ct_branch: ct.branch,
                    cnf_vars: 0,
                    cnf_clauses: 0,
                    elapsed_seconds: elapsed,
                    outcome: IterationOutcome::Inconclusive {
                        reason: reason.to_string(),
                    },
                });
                log.stop = match reason {
                    UnknownReason::Timeout => StopReason::Timeout,
                    UnknownReason::ConflictLimit => StopReason::Budget,
                    UnknownReason::ExternalFailure(_) => StopReason::SolverFailure,
                };
                return Ok(log);
            }
            Err(other) => return Err(other),
        }
    }
}

fn certificate_stats(
    work: &Problem,
    bound: u64,
    horizon: u64,
    cfg: &SolveConfig,
) -> Result<QueryStats, AnytimeError> {
    let ap = augment_problem(work, bound)?;
    let enc_system = if cfg.factoring {
        factor_actions(&ap.augmented.system)
    } else {
        ap.augmented.system.clone()
    };
    let enc_problem = Problem::new(
        enc_system,
        ap.augmented.costs.clone(),
        ap.augmented.init.clone(),
        ap.augmented.goal.clone(),
    );
    let (cnf, _) = encode_bounded(&enc_problem, horizon, &EncodeOptions { amo: cfg.amo })?;
    Ok(QueryStats {
        vars: cnf.var_count(),
        clauses: cnf.clause_count(),
        cnf_hash: fnv1a64_hex(emit_dimacs(&cnf).as_bytes()),
    })
}

fn plan_names(plan: &Plan) -> Vec<String> {
    plan.iter().map(|a| a.display_name()).collect()
}

/// Search strategy for producing a first (not necessarily optimal) plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStrategy {
    /// Cheapest-first search; the returned plan is already cost optimal.
    UniformCost,
    /// Fewest-unsatisfied-goal-literals-first search; fast and usually
    /// suboptimal.
    Greedy,
}

/// A search verdict: either a verified plan or a proof of unsolvability by
/// exhausted reachability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Plan(Plan),
    Unsolvable,
}

fn compile_for_search(prob: &Problem, caps: &TopologyCaps) -> Result<Compiled, AnytimeError> {
    let defects = validate_problem(prob);
    if !defects.is_empty() {
        return Err(AnytimeError::InvalidProblem(defects));
    }
    if prob.system.var_count() > caps.state_space_vars {
        return Err(AnytimeError::SearchCapExceeded(
            prob.system.var_count(),
            caps.state_space_vars,
        ));
    }
    Compiled::compile(&prob.system)
        .map_err(|n| AnytimeError::SearchCapExceeded(n, caps.state_space_vars))
}

/// A verified solution from explicit search, or an unsolvability verdict.
pub fn initial_plan(
    prob: &Problem,
    strategy: InitialStrategy,
    caps: &TopologyCaps,
) -> Result<SearchOutcome, AnytimeError> {
    let c = compile_for_search(prob, caps)?;
    let start = c
        .encode_full_state(&prob.init)
        .ok_or_else(|| AnytimeError::Internal("validated init must encode".to_string()))?;
    let (gm, gv) = c
        .encode_partial_state(&prob.goal)
        .ok_or_else(|| AnytimeError::Internal("validated goal must encode".to_string()))?;

    let costs: Vec<u64> = c
        .actions
        .iter()
        .map(|a| prob.costs.get(a).expect("validated total cost map"))
        .collect();

    let found = match strategy {
        InitialStrategy::UniformCost => dijkstra(&c, &costs, start, (gm, gv)).map(|(p, _)| p),
        InitialStrategy::Greedy => greedy(&c, start, (gm, gv)),
    };
    match found {
        Some(indices) => {
            let plan = Plan::new(indices.iter().map(|&i| c.actions[i].clone()).collect());
            debug_assert!(is_solution(prob, &plan));
            Ok(SearchOutcome::Plan(plan))
        }
        None => Ok(SearchOutcome::Unsolvable),
    }
}

/// Minimal solution cost by Dijkstra over the explicit weighted state
/// space; `None` when the goal is unreachable. Exhaustive and independent
/// of the whole SAT pipeline, for verification only.
pub fn oracle_optimal_cost(
    prob: &Problem,
    caps: &TopologyCaps,
) -> Result<Option<u64>, AnytimeError> {
    let c = compile_for_search(prob, caps)?;
    let start = c
        .encode_full_state(&prob.init)
        .ok_or_else(|| AnytimeError::Internal("validated init must encode".to_string()))?;
    let (gm, gv) = c
        .encode_partial_state(&prob.goal)
        .ok_or_else(|| AnytimeError::Internal("validated goal must encode".to_string()))?;
    let costs: Vec<u64> = c
        .actions
        .iter()
        .map(|a| prob.costs.get(a).expect("validated total cost map"))
        .collect();
    Ok(dijkstra(&c, &costs, start, (gm, gv)).map(|(_, cost)| cost))
}

fn dijkstra(
    c: &Compiled,
    costs: &[u64],
    start: u64,
    (gm, gv): (u64, u64),
) -> Option<(Vec<usize>, u64)> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = c.state_count();
    let mut dist = vec![u64::MAX; n];
    let mut pred: Vec<Option<(u64, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[start as usize] = 0;
    heap.push(Reverse((0u64, start)));
    while let Some(Reverse((d, s))) = heap.pop() {
        if d > dist[s as usize] {
            continue;
        }
        for (i, t) in c.successors(s) {
            let nd = d + costs[i];
            if nd < dist[t as usize] {
                dist[t as usize] = nd;
                pred[t as usize] = Some((s, i));
                heap.push(Reverse((nd, t)));
            }
        }
    }
    let best = (0..n as u64)
        .filter(|&s| s & gm == gv && dist[s as usize] != u64::MAX)
        .min_by_key(|&s| (dist[s as usize], s))?;
    Some((reconstruct(&pred, start, best), dist[best as usize]))
}

fn greedy(c: &Compiled, start: u64, (gm, gv): (u64, u64)) -> Option<Vec<usize>> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let n = c.state_count();
    let mut seen = vec![false; n];
    let mut pred: Vec<Option<(u64, usize)>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    let h = |s: u64| ((s ^ gv) & gm).count_ones();
    let mut tick = 0u64;
    seen[start as usize] = true;
    heap.push(Reverse((h(start), tick, start)));
    while let Some(Reverse((_, _, s))) = heap.pop() {
        if s & gm == gv {
            return Some(reconstruct(&pred, start, s));
        }
        for (i, t) in c.successors(s) {
            if !seen[t as usize] {
                seen[t as usize] = true;
                pred[t as usize] = Some((s, i));
                tick += 1;
                heap.push(Reverse((h(t), tick, t)));
            }
        }
    }
    None
}

fn reconstruct(pred: &[Option<(u64, usize)>], start: u64, mut state: u64) -> Vec<usize> {
    let mut actions = Vec::new();
    while state != start || pred[state as usize].is_some() {
        match pred[state as usize] {
            Some((prev, action)) => {
                actions.push(action);
                state = prev;
                if state == start {
                    break;
                }
            }
            None => break,
        }
    }
    actions.reverse();
    actions
}
