//! Exact brute-force computation of state-space topological properties and
//! completeness-threshold selection.
//!
//! All five metrics are exact at desk scale. Each carries a configurable
//! cap and refuses instances above it, because every one of them walks the
//! explicit state space:
//!
//! - diameter: BFS from every vertex;
//! - recurrence diameter: longest simple path by branch-and-bound DFS,
//!   cut off early once the traversal-diameter upper bound is met;
//! - traversal diameter: longest path in the SCC condensation, weighted by
//!   component sizes;
//! - sublist diameter: DFS over the prefix-closed tree of shortening-free
//!   sequences (a sequence with an equivalent proper sub-sequence never
//!   extends to a longer witness, and witnesses never revisit a state);
//! - subset diameter: reachability over (state, used-action-set) pairs,
//!   scoring each pair by the shortest path restricted to the used set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{plan_cost, Action, FactoredSystem, ModelError, Plan, Problem, State, Var};
use crate::space::Compiled;

/// Size limits for the exact metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyCaps {
    /// Variable cap for state-space expansion, diameter and traversal
    /// diameter (2^n vertices get materialized).
    pub state_space_vars: usize,
    /// Variable cap for the recurrence diameter (longest-simple-path search
    /// is exponential).
    pub recurrence_vars: usize,
    /// Vertex cap for sublist/subset diameter witness search.
    pub sublist_vertices: usize,
    /// Action cap for sublist/subset diameter witness search (the subset
    /// search ranges over action subsets).
    pub sublist_actions: usize,
}

impl Default for TopologyCaps {
    fn default() -> Self {
        TopologyCaps {
            state_space_vars: 16,
            recurrence_vars: 12,
            sublist_vertices: 8,
            sublist_actions: 12,
        }
    }
}

impl TopologyCaps {
    /// Caps wide enough for every system the random generators produce in
    /// this crate's test suites (up to 4 variables, 12 actions).
    pub fn test_scale() -> Self {
        TopologyCaps {
            state_space_vars: 16,
            recurrence_vars: 12,
            sublist_vertices: 16,
            sublist_actions: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("{metric} refused: {vars} variables exceed the {cap}-variable cap")]
    VarCapExceeded {
        metric: &'static str,
        cap: usize,
        vars: usize,
    },
    #[error("{metric} refused: {vertices} state-space vertices exceed the {cap}-vertex cap")]
    VertexCapExceeded {
        metric: &'static str,
        cap: usize,
        vertices: usize,
    },
    #[error("{metric} refused: {actions} actions exceed the {cap}-action cap")]
    ActionCapExceeded {
        metric: &'static str,
        cap: usize,
        actions: usize,
    },
    #[error(transparent)]
    Cost(#[from] ModelError),
}

/// The explicit state space: all `2^n` valid states plus one edge per
/// applicable `(state, action)` pair. Self-loops produced by applicable
/// actions whose effects change nothing are retained; inapplicable actions
/// produce no edge.
#[derive(Debug, Clone)]
pub struct StateSpace {
    compiled: Compiled,
    edges: Vec<(u64, u32, u64)>,
}

impl StateSpace {
    pub fn vertex_count(&self) -> usize {
        self.compiled.state_count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(state, action index, successor)` over bit-packed states.
    pub fn edge_indices(&self) -> &[(u64, u32, u64)] {
        &self.edges
    }

    pub fn action(&self, index: u32) -> &Action {
        &self.compiled.actions[index as usize]
    }

    pub fn vertices(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.vertex_count() as u64).map(|s| self.compiled.decode_state(s))
    }

    pub fn decode(&self, bits: u64) -> State {
        self.compiled.decode_state(bits)
    }

    /// Out-edges of one vertex as `(action index, successor)`.
    pub fn out_edges(&self, state: u64) -> Vec<(u32, u64)> {
        self.compiled
            .successors(state)
            .map(|(i, t)| (i as u32, t))
            .collect()
    }
}

fn compile_capped(
    sys: &FactoredSystem,
    metric: &'static str,
    var_cap: usize,
) -> Result<Compiled, TopologyError> {
    let vars = sys.var_count();
    if vars > var_cap {
        return Err(TopologyError::VarCapExceeded {
            metric,
            cap: var_cap,
            vars,
        });
    }
    Compiled::compile(sys).map_err(|actual| TopologyError::VarCapExceeded {
        metric,
        cap: var_cap,
        vars: actual,
    })
}

/// Expands the complete explicit state space.
pub fn build_state_space(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<StateSpace, TopologyError> {
    let compiled = compile_capped(sys, "state-space expansion", caps.state_space_vars)?;
    let mut edges = Vec::new();
    for s in 0..compiled.state_count() as u64 {
        for (i, t) in compiled.successors(s) {
            edges.push((s, i as u32, t));
        }
    }
    Ok(StateSpace { compiled, edges })
}

/// `2^n − 1`: the state-count completeness threshold that needs no
/// topology at all. Saturates at `u64::MAX` for 64+ variables.
pub fn trivial_bound(sys: &FactoredSystem) -> u64 {
    let n = sys.var_count();
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Longest shortest path between reachable ordered state pairs.
pub fn diameter(sys: &FactoredSystem, caps: &TopologyCaps) -> Result<u64, TopologyError> {
    let c = compile_capped(sys, "diameter", caps.state_space_vars)?;
    Ok(diameter_compiled(&c))
}

fn diameter_compiled(c: &Compiled) -> u64 {
    let n = c.state_count();
    let mut best = 0u64;
    let mut dist = vec![u32::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..n as u64 {
        dist.fill(u32::MAX);
        dist[start as usize] = 0;
        queue.clear();
        queue.push_back(start);
        while let Some(s) = queue.pop_front() {
            let d = dist[s as usize];
            best = best.max(d as u64);
            for (_, t) in c.successors(s) {
                if dist[t as usize] == u32::MAX {
                    dist[t as usize] = d + 1;
                    queue.push_back(t);
                }
            }
        }
    }
    best
}

/// Longest simple path (edge count) in the state space.
pub fn recurrence_diameter(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<u64, TopologyError> {
    let c = compile_capped(sys, "recurrence diameter", caps.recurrence_vars)?;
    Ok(recurrence_diameter_compiled(&c))
}

fn recurrence_diameter_compiled(c: &Compiled) -> u64 {
    let n = c.state_count();
    // Distinct successor states per vertex; parallel edges add nothing.
    let succs: Vec<Vec<u64>> = (0..n as u64)
        .map(|s| {
            let mut out: Vec<u64> = c.successors(s).map(|(_, t)| t).filter(|&t| t != s).collect();
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    // rd ≤ td: stop as soon as the bound is met.
    let ub = traversal_diameter_compiled(c);
    let mut visited = vec![false; n];
    let mut best = 0u64;

    fn dfs(
        s: u64,
        len: u64,
        succs: &[Vec<u64>],
        visited: &mut [bool],
        best: &mut u64,
        ub: u64,
    ) {
        *best = (*best).max(len);
        if *best >= ub {
            return;
        }
        for &t in &succs[s as usize] {
            if !visited[t as usize] {
                // Counting unvisited states reachable from t bounds any
                // extension through t.
                if reach_bound(t, succs, visited) as u64 + len < *best + 1 {
                    continue;
                }
                visited[t as usize] = true;
                dfs(t, len + 1, succs, visited, best, ub);
                visited[t as usize] = false;
                if *best >= ub {
                    return;
                }
            }
        }
    }

    // Unvisited states reachable from t (including t itself).
    fn reach_bound(t: u64, succs: &[Vec<u64>], visited: &[bool]) -> usize {
        let mut seen = vec![false; succs.len()];
        let mut stack = vec![t];
        seen[t as usize] = true;
        let mut count = 0usize;
        while let Some(s) = stack.pop() {
            count += 1;
            for &u in &succs[s as usize] {
                if !seen[u as usize] && !visited[u as usize] {
                    seen[u as usize] = true;
                    stack.push(u);
                }
            }
        }
        count
    }

    for start in 0..n as u64 {
        if best >= ub {
            break;
        }
        visited[start as usize] = true;
        dfs(start, 0, &succs, &mut visited, &mut best, ub);
        visited[start as usize] = false;
    }
    best
}

/// One less than the largest number of distinct states a single walk can
/// traverse.
pub fn traversal_diameter(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<u64, TopologyError> {
    let c = compile_capped(sys, "traversal diameter", caps.state_space_vars)?;
    Ok(traversal_diameter_compiled(&c))
}

/// A walk can tour every state of each strongly connected component it
/// passes through and components are never re-entered, so the maximum
/// number of traversed states is the heaviest path in the condensation
/// weighted by component size.
fn traversal_diameter_compiled(c: &Compiled) -> u64 {
    let n = c.state_count();
    let comp = scc(c);
    let comp_count = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut size = vec![0u64; comp_count];
    for s in 0..n {
        size[comp[s]] += 1;
    }
    // Tarjan numbers components in reverse topological order: every edge
    // target has a smaller component index than its source, so one
    // ascending sweep sees finished targets.
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); comp_count];
    for s in 0..n as u64 {
        for (_, t) in c.successors(s) {
            let (a, b) = (comp[s as usize], comp[t as usize]);
            if a != b {
                out[a].push(b);
            }
        }
    }
    let mut best = vec![0u64; comp_count];
    for comp_id in 0..comp_count {
        let continuation = out[comp_id].iter().map(|&b| best[b]).max().unwrap_or(0);
        best[comp_id] = size[comp_id] + continuation;
    }
    best.iter().copied().max().map_or(0, |m| m - 1)
}

/// Iterative Tarjan SCC. Returns the component index per state, numbered
/// in reverse topological order.
fn scc(c: &Compiled) -> Vec<usize> {
    let n = c.state_count();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack: Vec<u64> = Vec::new();
    let mut next_index = 0usize;
    let mut comp_count = 0usize;

    // Explicit DFS machine: (state, iterator position over successors).
    let succs: Vec<Vec<u64>> = (0..n as u64)
        .map(|s| c.successors(s).map(|(_, t)| t).collect())
        .collect();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec <(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v as u64);
                on_stack[v] = true;
            }
            if *pos < succs[v].len() {
                let w = succs[v][*pos] as usize;
                *pos += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack") as usize;
                        on_stack[w] = false;
                        comp[w] = comp_count;
                        if w == v {
                            break;
                        }
                    }
                    comp_count += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    comp
}

fn vertex_capped(
    sys: &FactoredSystem,
    metric: &'static str,
    caps: &TopologyCaps,
) -> Result<Compiled, TopologyError> {
    let c = compile_capped(sys, metric, caps.state_space_vars)?;
    let vertices = c.state_count();
    if vertices > caps.sublist_vertices {
        return Err(TopologyError::VertexCapExceeded {
            metric,
            cap: caps.sublist_vertices,
            vertices,
        });
    }
    // Action subsets are tracked in a 32-bit mask.
    let action_cap = caps.sublist_actions.min(31);
    if c.action_count() > action_cap {
        return Err(TopologyError::ActionCapExceeded {
            metric,
            cap: action_cap,
            actions: c.action_count(),
        });
    }
    Ok(c)
}

/// Worst-case length of the shortest order-preserving shortening of any
/// action sequence.
pub fn sublist_diameter(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<u64, TopologyError> {
    let c = vertex_capped(sys, "sublist diameter", caps)?;
    Ok(sublist_diameter_compiled(&c))
}

const INF: u32 = u32::MAX;

/// DFS over shortening-free sequences only. `short[s]` is the length of
/// the shortest sub-sequence of the current sequence that reaches `s`; an
/// extension survives iff no shorter sub-sequence reaches its endpoint,
/// and the longest surviving sequence is the sublist diameter.
fn sublist_diameter_compiled(c: &Compiled) -> u64 {
    let n = c.state_count();
    let mut best = 0u64;

    fn dfs(
        c: &Compiled,
        cur: u64,
        len: u32,
        short: &[u32],
        on_path: &mut [bool],
        best: &mut u64,
    ) {
        *best = (*best).max(len as u64);
        for i in 0..c.action_count() {
            if !c.applicable(i, cur) {
                continue;
            }
            let next = c.apply(i, cur);
            // Witnesses never revisit: a repeated state admits a shortcut.
            if next == cur || on_path[next as usize] {
                continue;
            }
            // One DP step: keep (skip) or append `i` to any reachable
            // shortening.
            let mut stepped: Vec<u32> = short.to_vec();
            for s in 0..short.len() as u64 {
                if short[s as usize] == INF || !c.applicable(i, s) {
                    continue;
                }
                let t = c.apply(i, s) as usize;
                stepped[t] = stepped[t].min(short[s as usize].saturating_add(1));
            }
            if stepped[next as usize] != len + 1 {
                continue; // A shorter equivalent sub-sequence exists.
            }
            on_path[next as usize] = true;
            dfs(c, next, len + 1, &stepped, on_path, best);
            on_path[next as usize] = false;
        }
    }

    for start in 0..n as u64 {
        let mut short = vec![INF; n];
        short[start as usize] = 0;
        let mut on_path = vec![false; n];
        on_path[start as usize] = true;
        dfs(c, start, 0, &short, &mut on_path, &mut best);
    }
    best
}

/// Worst-case length of the shortest any-order re-selection from an action
/// sequence. Also exposed with the witness pair that attains it.
pub fn subset_diameter(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<u64, TopologyError> {
    subset_diameter_with_witness(sys, caps).map(|(value, _)| value)
}

/// A `(start state, action sequence)` pair attaining the subset diameter:
/// no re-selection from the sequence's action set reaches the same end
/// state in fewer steps.
/// `(state, used-action-set)` exploration bookkeeping: each pair maps to
/// the predecessor pair and action that first reached it.
type PairParents = BTreeMap<(u64, u32), Option<((u64, u32), usize)>>;

pub fn subset_diameter_with_witness(
    sys: &FactoredSystem,
    caps: &TopologyCaps,
) -> Result<(u64, Option<(State, Plan)>), TopologyError> {
    let c = vertex_capped(sys, "subset diameter", caps)?;
    let n = c.state_count();
    let mut best = 0u64;
    let mut witness: Option<(u64, Vec<usize>)> = None;

    for start in 0..n as u64 {
        // Forward exploration over (state, used-action-set) pairs. Parents
        // let us rebuild one realizing sequence per pair.
        let mut seen: PairParents = BTreeMap::new();
        let mut queue = std::collections::VecDeque::new();
        seen.insert((start, 0), None);
        queue.push_back((start, 0u32));
        while let Some((s, used)) = queue.pop_front() {
            for (i, t) in c.successors(s) {
                if t == s {
                    continue;
                }
                let key = (t, used | (1 << i));
                if let std::collections::btree_map::Entry::Vacant(slot) = seen.entry(key) {
                    slot.insert(Some(((s, used), i)));
                    queue.push_back(key);
                }
            }
        }

        // Score every pair: shortest path from start to its endpoint using
        // only the actions the pair's sequence drew on.
        let mut dist_by_support: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &(end, used) in seen.keys() {
            let dist = dist_by_support
                .entry(used)
                .or_insert_with(|| bfs_restricted(&c, start, used));
            let d = dist[end as usize];
            debug_assert_ne!(d, INF, "endpoint must be reachable via its own support");
            if d as u64 > best {
                best = d as u64;
                witness = Some((start, rebuild(&seen, (end, used))));
            }
        }
    }

    let witness = witness.map(|(start, actions)| {
        let plan: Plan = actions.iter().map(|&i| c.actions[i].clone()).collect();
        (c.decode_state(start), plan)
    });
    Ok((best, witness))
}

fn bfs_restricted(c: &Compiled, start: u64, used: u32) -> Vec<u32> {
    let mut dist = vec![INF; c.state_count()];
    dist[start as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        for (i, t) in c.successors(s) {
            if used & (1 << i) == 0 {
                continue;
            }
            if dist[t as usize] == INF {
                dist[t as usize] = dist[s as usize] + 1;
                queue.push_back(t);
            }
        }
    }
    dist
}

fn rebuild(seen: &PairParents, mut key: (u64, u32)) -> Vec<usize> {
    let mut actions = Vec::new();
    while let Some(Some((parent, action))) = seen.get(&key) {
        actions.push(*action);
        key = *parent;
    }
    actions.reverse();
    actions
}

/// All six numbers of a topology report, with per-metric refusals instead
/// of failures when a cap is exceeded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub var_count: usize,
    pub action_count: usize,
    pub diameter: Option<u64>,
    pub recurrence_diameter: Option<u64>,
    pub traversal_diameter: Option<u64>,
    pub sublist_diameter: Option<u64>,
    pub subset_diameter: Option<u64>,
    pub trivial_bound: u64,
    /// Human-readable refusal per capped-out metric.
    pub refusals: Vec<String>,
}

/// Computes every metric the caps allow.
pub fn analyze(sys: &FactoredSystem, caps: &TopologyCaps) -> TopologyReport {
    let mut refusals = Vec::new();
    let mut run = |r: Result<u64, TopologyError>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            refusals.push(e.to_string());
            None
        }
    };
    TopologyReport {
        var_count: sys.var_count(),
        action_count: sys.action_count(),
        diameter: run(diameter(sys, caps)),
        recurrence_diameter: run(recurrence_diameter(sys, caps)),
        traversal_diameter: run(traversal_diameter(sys, caps)),
        sublist_diameter: run(sublist_diameter(sys, caps)),
        subset_diameter: run(subset_diameter(sys, caps)),
        trivial_bound: trivial_bound(sys),
        refusals,
    }
}

/// Where a horizon may come from when the cost structure forces topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", content = "bound")]
pub enum BoundMode {
    /// Exact sublist diameter, subject to caps.
    Exact,
    /// The `2^n − 1` state-count bound.
    Trivial,
    /// An externally computed bound, trusted as supplied.
    Supplied(u64),
}

/// Which rule produced a completeness threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CtBranch {
    /// All costs are 1: the current plan's length.
    UnitCostPlanLength,
    /// No cost is 0: current cost over the minimum action cost.
    CostRatio,
    /// Some cost is 0: the sublist diameter.
    SublistDiameter,
    /// Some cost is 0: the `2^n − 1` bound.
    TrivialBound,
    /// Some cost is 0: an externally supplied bound.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtOutcome {
    pub horizon: u64,
    pub branch: CtBranch,
    pub warnings: Vec<String>,
}

/// Selects a completeness threshold for `prob` given a known solution
/// `current`:
///
/// - all action costs 1 → `|current|`;
/// - no action cost 0 → `⌊cost(current) / c_min⌋`;
/// - otherwise the cost structure says nothing and the horizon comes from
///   `mode` (exact sublist diameter, trivial state-count bound, or a
///   supplied bound, which is trusted but sanity-checked against the
///   diameter when that is cheap to compute).
pub fn completeness_threshold(
    prob: &Problem,
    current: &Plan,
    mode: BoundMode,
    caps: &TopologyCaps,
) -> Result<CtOutcome, TopologyError> {
    let costs: Vec<u64> = prob
        .system
        .actions()
        .map(|a| prob.costs.get(a).ok_or_else(|| ModelError::MissingCost(a.display_name())))
        .collect::<Result<_, _>>()?;

    if costs.iter().all(|&c| c == 1) {
        return Ok(CtOutcome {
            horizon: current.len() as u64,
            branch: CtBranch::UnitCostPlanLength,
            warnings: Vec::new(),
        });
    }
    if costs.iter().all(|&c| c != 0) {
        let c_min = costs.iter().copied().min().expect("nonempty by branch");
        let total = plan_cost(&prob.costs, current)?;
        return Ok(CtOutcome {
            horizon: total / c_min,
            branch: CtBranch::CostRatio,
            warnings: Vec::new(),
        });
    }
    match mode {
        BoundMode::Exact => Ok(CtOutcome {
            horizon: sublist_diameter(&prob.system, caps)?,
            branch: CtBranch::SublistDiameter,
            warnings: Vec::new(),
        }),
        BoundMode::Trivial => Ok(CtOutcome {
            horizon: trivial_bound(&prob.system),
            branch: CtBranch::TrivialBound,
            warnings: Vec::new(),
        }),
        BoundMode::Supplied(bound) => {
            let mut warnings = Vec::new();
            if let Ok(d) = diameter(&prob.system, caps) {
                if bound < d {
                    warnings.push(format!(
                        "supplied bound {bound} is below the diameter {d}; \
                         optimality proofs at this horizon are unsound"
                    ));
                }
            }
            Ok(CtOutcome {
                horizon: bound,
                branch: CtBranch::Supplied,
                warnings,
            })
        }
    }
}

/// Convenience wrapper: the full domain of a system as a `Var` list.
pub fn universe(sys: &FactoredSystem) -> Vec<Var> {
    sys.vars().iter().cloned().collect()
}
