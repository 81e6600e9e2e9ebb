//! Independent brute-force oracles used only by tests.
//!
//! Each function recomputes a metric by a different route than the
//! production code in [`crate::topology`]: Floyd–Warshall instead of
//! per-source BFS, subset DP instead of branch-and-bound, literal
//! definition-chasing sequence enumeration instead of pruned witness
//! search. Keep them dumb.

use std::collections::HashMap;

use crate::model::FactoredSystem;
use crate::space::Compiled;

pub fn compiled(sys: &FactoredSystem) -> Compiled {
    Compiled::compile(sys).expect("oracle systems stay tiny")
}

/// Diameter by Floyd–Warshall.
pub fn diameter_fw(c: &Compiled) -> u64 {
    let n = c.state_count();
    let inf = u64::MAX / 4;
    let mut dist = vec![inf; n * n];
    for s in 0..n {
        dist[s * n + s] = 0;
        for (_, t) in c.successors(s as u64) {
            let d = &mut dist[s * n + t as usize];
            *d = (*d).min(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i * n + k] + dist[k * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
    (0..n * n).map(|ij| dist[ij]).filter(|&d| d < inf).max().unwrap_or(0)
}

/// Recurrence diameter by DP over visited-set masks. Needs ≤ 20 states.
pub fn rd_subset_dp(c: &Compiled) -> u64 {
    let n = c.state_count();
    assert!(n <= 20, "subset DP oracle needs a tiny state space");
    let full = 1usize << n;
    // ends[mask]: endpoints of simple paths visiting exactly `mask`.
    let mut ends = vec![0u32; full];
    for v in 0..n {
        ends[1 << v] = 1 << v;
    }
    let mut best = 0u64;
    for mask in 1..full {
        let e = ends[mask];
        if e == 0 {
            continue;
        }
        best = best.max(mask.count_ones() as u64 - 1);
        for v in 0..n {
            if e & (1 << v) == 0 {
                continue;
            }
            for (_, t) in c.successors(v as u64) {
                let t = t as usize;
                if mask & (1 << t) == 0 {
                    ends[mask | (1 << t)] |= 1 << t;
                }
            }
        }
    }
    best
}

/// Traversal diameter by DFS over walks with (state, visited-set)
/// memoization. Needs ≤ 16 states.
pub fn td_walk_dfs(c: &Compiled) -> u64 {
    let n = c.state_count();
    assert!(n <= 16, "walk DFS oracle needs a tiny state space");
    let mut memo: HashMap<(u64, u32), u32> = HashMap::new();

    fn go(c: &Compiled, s: u64, vis: u32, memo: &mut HashMap<(u64, u32), u32>) -> u32 {
        if let Some(&v) = memo.get(&(s, vis)) {
            return v;
        }
        // Wander freely through already-visited states, then step out.
        let mut frontier = vec![s];
        let mut inside = 1u32 << s;
        let mut exits: Vec<u64> = Vec::new();
        while let Some(w) = frontier.pop() {
            for (_, t) in c.successors(w) {
                let bit = 1u32 << t;
                if vis & bit != 0 {
                    if inside & bit == 0 {
                        inside |= bit;
                        frontier.push(t);
                    }
                } else {
                    exits.push(t);
                }
            }
        }
        exits.sort_unstable();
        exits.dedup();
        let mut best = vis.count_ones();
        for t in exits {
            best = best.max(go(c, t, vis | (1 << t), memo));
        }
        memo.insert((s, vis), best);
        best
    }

    let mut best = 0u64;
    for s in 0..n as u64 {
        best = best.max(go(c, s, 1 << s, &mut memo) as u64);
    }
    best - 1
}

const INF: u32 = u32::MAX;

/// Sublist diameter by enumerating every action sequence up to `max_len`
/// (no-op steps included) and scoring each with the shortening DP.
pub fn ell_enumerate(c: &Compiled, max_len: usize) -> u64 {
    let mut best = 0u64;

    fn go(c: &Compiled, left: usize, end: u64, short: &[u32], best: &mut u64) {
        *best = (*best).max(short[end as usize] as u64);
        if left == 0 {
            return;
        }
        for i in 0..c.action_count() {
            let new_end = c.execute(i, end);
            let mut stepped = short.to_vec();
            for s in 0..short.len() as u64 {
                if short[s as usize] == INF || !c.applicable(i, s) {
                    continue;
                }
                let t = c.apply(i, s) as usize;
                stepped[t] = stepped[t].min(short[s as usize] + 1);
            }
            go(c, left - 1, new_end, &stepped, best);
        }
    }

    for start in 0..c.state_count() as u64 {
        let mut short = vec![INF; c.state_count()];
        short[start as usize] = 0;
        go(c, max_len, start, &short, &mut best);
    }
    best
}

/// Subset diameter by enumerating every action sequence up to `max_len`
/// and scoring each end state with a shortest path restricted to the
/// sequence's action set.
pub fn subset_enumerate(c: &Compiled, max_len: usize) -> u64 {
    let mut best = 0u64;

    fn go(c: &Compiled, start: u64, left: usize, end: u64, used: u32, best: &mut u64) {
        *best = (*best).max(restricted_dist(c, start, used)[end as usize] as u64);
        if left == 0 {
            return;
        }
        for i in 0..c.action_count() {
            go(c, start, left - 1, c.execute(i, end), used | (1 << i), best);
        }
    }

    for start in 0..c.state_count() as u64 {
        go(c, start, max_len, start, 0, &mut best);
    }
    best
}

fn restricted_dist(c: &Compiled, start: u64, used: u32) -> Vec<u32> {
    let mut dist = vec![INF; c.state_count()];
    dist[start as usize] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        for (i, t) in c.successors(s) {
            if used & (1 << i) != 0 && dist[t as usize] == INF {
                dist[t as usize] = dist[s as usize] + 1;
                queue.push_back(t);
            }
        }
    }
    dist
}

/// Satisfiability by full truth-table sweep, 64 assignments per word.
/// Variables beyond the first six index the word; the first six live in
/// the bit patterns, so formulas up to 20 variables stay affordable.
pub fn sat_by_truth_table(cnf: &crate::sat::Cnf) -> bool {
    let n = cnf.var_count() as usize;
    assert!(n <= 24, "truth-table oracle needs few variables");
    const PATTERNS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    let words = 1usize << n.saturating_sub(6);
    for word in 0..words as u64 {
        let mut all_clauses = u64::MAX;
        for clause in cnf.clauses() {
            let mut any_lit = 0u64;
            for &l in clause.lits() {
                let v = (l.var() - 1) as usize;
                let column = if v < 6 {
                    PATTERNS[v]
                } else if word & (1 << (v - 6)) != 0 {
                    u64::MAX
                } else {
                    0
                };
                any_lit |= if l.is_positive() { column } else { !column };
            }
            all_clauses &= any_lit;
            if all_clauses == 0 {
                break;
            }
        }
        // Mask off assignments that do not exist for n < 6.
        if n < 6 {
            all_clauses &= (1u64 << (1 << n)) - 1;
        }
        if all_clauses != 0 {
            return true;
        }
    }
    false
}

/// Reachable-state layers by exact applied-step count.
pub fn reach_by_length(c: &Compiled, start: u64, max_len: usize) -> Vec<Vec<bool>> {
    let n = c.state_count();
    let mut layers = Vec::with_capacity(max_len + 1);
    let mut cur = vec![false; n];
    cur[start as usize] = true;
    layers.push(cur.clone());
    for _ in 0..max_len {
        let mut next = vec![false; n];
        for s in 0..n as u64 {
            if cur[s as usize] {
                for (_, t) in c.successors(s) {
                    next[t as usize] = true;
                }
            }
        }
        layers.push(next.clone());
        cur = next;
    }
    layers
}

/// Minimum plan cost per exact applied-step count, up to `max_len` steps:
/// `out[k][state]` is the cheapest cost reaching `state` in exactly `k`
/// applicable steps, or `None`.
pub fn min_cost_by_length(
    c: &Compiled,
    costs: &[u64],
    start: u64,
    max_len: usize,
) -> Vec<Vec<Option<u64>>> {
    let n = c.state_count();
    let mut layers: Vec<Vec<Option<u64>>> = Vec::with_capacity(max_len + 1);
    let mut cur = vec![None; n];
    cur[start as usize] = Some(0);
    layers.push(cur.clone());
    for _ in 0..max_len {
        let mut next: Vec<Option<u64>> = vec![None; n];
        for s in 0..n as u64 {
            if let Some(base) = cur[s as usize] {
                for (i, t) in c.successors(s) {
                    let cand = base + costs[i];
                    let slot = &mut next[t as usize];
                    if slot.is_none_or(|old| cand < old) {
                        *slot = Some(cand);
                    }
                }
            }
        }
        layers.push(next.clone());
        cur = next;
    }
    layers
}

/// Cheapest cost of reaching a goal-satisfying state within `max_len`
/// applied steps, or `None` when unreachable in that many.
pub fn bounded_optimal_cost(
    c: &Compiled,
    costs: &[u64],
    start: u64,
    goal: (u64, u64),
    max_len: usize,
) -> Option<u64> {
    let layers = min_cost_by_length(c, costs, start, max_len);
    let (gm, gv) = goal;
    layers
        .iter()
        .flat_map(|layer| {
            (0..c.state_count() as u64)
                .filter(|&s| s & gm == gv)
                .filter_map(|s| layer[s as usize])
        })
        .min()
}
