//! Conflict-driven clause learning with two-watched-literal propagation,
//! first-UIP learning, VSIDS-style activity decay, Luby restarts and
//! periodic learned-clause deletion.
//!
//! The solver is completely deterministic: no randomized polarity or
//! tie-breaking, activity ties resolve towards the smaller variable.

use std::time::Instant;

use super::{Budget, Cnf, Model, SolveResult, UnknownReason};

/// Internal literal: `(var << 1) | negated`, variables 0-based.
type ILit = u32;

fn ilit(var: usize, negated: bool) -> ILit {
    ((var as u32) << 1) | negated as u32
}

fn ivar(l: ILit) -> usize {
    (l >> 1) as usize
}

fn ineg(l: ILit) -> bool {
    l & 1 == 1
}

fn iflip(l: ILit) -> ILit {
    l ^ 1
}

#[derive(Debug)]
struct ClauseSlot {
    lits: Vec<ILit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

const UNASSIGNED: i8 = 0;

pub(super) struct Solver {
    num_vars: usize,
    clauses: Vec<ClauseSlot>,
    /// Watch lists indexed by literal code; a clause sits in the lists of
    /// its first two literals.
    watches: Vec<Vec<usize>>,
    /// +1 true, -1 false, 0 unassigned; indexed by variable.
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    phase: Vec<bool>,
    heap: IndexedHeap,
    seen: Vec<bool>,
    conflicts: u64,
    max_learnts: f64,
    unsat_on_input: bool,
    /// Unit facts (original and learned); kept for the UNSAT self-check,
    /// which re-propagates from an empty trail.
    units: Vec<ILit>,
}

impl Solver {
    pub(super) fn new(cnf: &Cnf) -> Solver {
        let n = cnf.var_count() as usize;
        let mut s = Solver {
            num_vars: n,
            clauses: Vec::with_capacity(cnf.clause_count()),
            watches: vec![Vec::new(); 2 * n],
            assign: vec![UNASSIGNED; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            var_inc: 1.0,
            cla_inc: 1.0,
            phase: vec![false; n],
            heap: IndexedHeap::new(n),
            seen: vec![false; n],
            conflicts: 0,
            max_learnts: cnf.clause_count() as f64 / 3.0 + 100.0,
            unsat_on_input: false,
            units: Vec::new(),
        };
        for c in cnf.clauses() {
            let lits: Vec<ILit> = c
                .lits()
                .iter()
                .map(|l| ilit((l.var() - 1) as usize, !l.is_positive()))
                .collect();
            if s.unsat_on_input {
                break;
            }
            match lits.len() {
                0 => s.unsat_on_input = true,
                1 => {
                    s.units.push(lits[0]);
                    if !s.enqueue(lits[0], None) {
                        s.unsat_on_input = true;
                    }
                }
                _ => {
                    s.add_clause_slot(lits, false);
                }
            }
        }
        s
    }

    fn add_clause_slot(&mut self, lits: Vec<ILit>, learnt: bool) -> usize {
        let idx = self.clauses.len();
        self.watches[lits[0] as usize].push(idx);
        self.watches[lits[1] as usize].push(idx);
        self.clauses.push(ClauseSlot {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        idx
    }

    fn value(&self, l: ILit) -> i8 {
        let v = self.assign[ivar(l)];
        if ineg(l) {
            -v
        } else {
            v
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: ILit, from: Option<usize>) -> bool {
        match self.value(l) {
            1 => true,
            -1 => false,
            _ => {
                let v = ivar(l);
                self.assign[v] = if ineg(l) { -1 } else { 1 };
                self.level[v] = self.decision_level();
                self.reason[v] = from;
                self.trail.push(l);
                true
            }
        }
    }

    /// Two-watched-literal unit propagation. Returns a conflicting clause.
    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = iflip(p);
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let mut keep = 0usize;
            let mut conflict = None;
            let mut i = 0usize;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                if self.clauses[ci].deleted {
                    continue;
                }
                // Put the falsified literal at slot 1.
                if self.clauses[ci].lits[0] == false_lit {
                    self.clauses[ci].lits.swap(0, 1);
                }
                let first = self.clauses[ci].lits[0];
                if self.value(first) == 1 {
                    ws[keep] = ci;
                    keep += 1;
                    continue;
                }
                // Find a replacement watch among the tail literals.
                let mut moved = false;
                for k in 2..self.clauses[ci].lits.len() {
                    let cand = self.clauses[ci].lits[k];
                    if self.value(cand) != -1 {
                        self.clauses[ci].lits.swap(1, k);
                        self.watches[cand as usize].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                // Unit or conflicting.
                ws[keep] = ci;
                keep += 1;
                if !self.enqueue(first, Some(ci)) {
                    conflict = Some(ci);
                    // Retain the rest of the watch list untouched.
                    while i < ws.len() {
                        ws[keep] = ws[i];
                        keep += 1;
                        i += 1;
                    }
                    self.qhead = self.trail.len();
                }
            }
            ws.truncate(keep);
            debug_assert!(self.watches[false_lit as usize].is_empty());
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.update(v, &self.activity);
    }

    fn bump_clause(&mut self, ci: usize) {
        let slot = &mut self.clauses[ci];
        if slot.learnt {
            slot.activity += self.cla_inc;
            if slot.activity > 1e20 {
                for c in &mut self.clauses {
                    c.activity *= 1e-20;
                }
                self.cla_inc *= 1e-20;
            }
        }
    }

    /// First-UIP conflict analysis. Returns the learned clause (asserting
    /// literal first) and the backjump level.
    fn analyze(&mut self, mut confl: usize) -> (Vec<ILit>, u32) {
        let mut learnt: Vec<ILit> = vec![0];
        let mut counter = 0usize;
        let mut p: Option<ILit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        let mut to_clear: Vec<usize> = Vec::new();

        loop {
            self.bump_clause(confl);
            let lits: Vec<ILit> = self.clauses[confl].lits.clone();
            for &q in lits.iter().filter(|&&q| Some(q) != p) {
                let v = ivar(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    to_clear.push(v);
                    self.bump_var(v);
                    if self.level[v] >= current {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[ivar(self.trail[index])] {
                    break;
                }
            }
            let uip = self.trail[index];
            self.seen[ivar(uip)] = false;
            counter -= 1;
            if counter == 0 {
                learnt[0] = iflip(uip);
                break;
            }
            p = Some(uip);
            confl = self.reason[ivar(uip)].expect("non-decision on conflict side");
        }

        for v in to_clear {
            self.seen[v] = false;
        }

        // Backjump to the second-highest level in the clause; keep that
        // literal at slot 1 so the watches stay sound.
        let mut bj = 0u32;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[ivar(learnt[k])] > self.level[ivar(learnt[max_i])] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            bj = self.level[ivar(learnt[1])];
        }
        (learnt, bj)
    }

    fn backjump(&mut self, target: u32) {
        while self.decision_level() > target {
            let limit = self.trail_lim.pop().expect("levels match trail");
            while self.trail.len() > limit {
                let l = self.trail.pop().expect("nonempty trail");
                let v = ivar(l);
                self.phase[v] = !ineg(l);
                self.assign[v] = UNASSIGNED;
                self.reason[v] = None;
                self.heap.insert(v, &self.activity);
            }
        }
        self.qhead = self.trail.len();
    }

    fn decide(&mut self) -> bool {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assign[v] == UNASSIGNED {
                self.trail_lim.push(self.trail.len());
                let lit = ilit(v, !self.phase[v]);
                let ok = self.enqueue(lit, None);
                debug_assert!(ok);
                return true;
            }
        }
        false
    }

    fn locked(&self, ci: usize) -> bool {
        let first = self.clauses[ci].lits[0];
        self.value(first) == 1 && self.reason[ivar(first)] == Some(ci)
    }

    /// Drops the lazier half of the learned clauses and rebuilds watches.
    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| {
                self.clauses[i].learnt
                    && !self.clauses[i].deleted
                    && self.clauses[i].lits.len() > 2
                    && !self.locked(i)
            })
            .collect();
        learnts.sort_by(|&a, &b| {
            self.clauses[a]
                .activity
                .partial_cmp(&self.clauses[b].activity)
                .expect("activities are finite")
                .then(b.cmp(&a))
        });
        for &ci in learnts.iter().take(learnts.len() / 2) {
            self.clauses[ci].deleted = true;
        }
        for w in &mut self.watches {
            w.clear();
        }
        for ci in 0..self.clauses.len() {
            if !self.clauses[ci].deleted {
                let (a, b) = (self.clauses[ci].lits[0], self.clauses[ci].lits[1]);
                self.watches[a as usize].push(ci);
                self.watches[b as usize].push(ci);
            }
        }
    }

    /// Fresh counting propagation over the live clause database, ignoring
    /// the trail. Confirms that the final conflict really follows.
    fn confirm_unsat_by_propagation(&self) -> bool {
        let mut value: Vec<i8> = vec![UNASSIGNED; self.num_vars];
        for &l in &self.units {
            let v = ivar(l);
            let want = if ineg(l) { -1 } else { 1 };
            if value[v] == -want {
                return true;
            }
            value[v] = want;
        }
        loop {
            let mut progressed = false;
            for slot in self.clauses.iter().filter(|s| !s.deleted) {
                let mut unassigned: Option<ILit> = None;
                let mut satisfied = false;
                let mut false_count = 0usize;
                for &l in &slot.lits {
                    let v = value[ivar(l)];
                    let lv = if ineg(l) { -v } else { v };
                    match lv {
                        1 => {
                            satisfied = true;
                            break;
                        }
                        -1 => false_count += 1,
                        _ => unassigned = Some(l),
                    }
                }
                if satisfied {
                    continue;
                }
                if false_count == slot.lits.len() {
                    return true;
                }
                if false_count + 1 == slot.lits.len() {
                    let l = unassigned.expect("exactly one open literal");
                    value[ivar(l)] = if ineg(l) { -1 } else { 1 };
                    progressed = true;
                }
            }
            if !progressed {
                return false;
            }
        }
    }

    pub(super) fn solve(mut self, budget: Budget) -> SolveResult {
        if self.unsat_on_input {
            return SolveResult::Unsat;
        }
        let start = Instant::now();
        let mut restart_round = 0u64;
        let mut restart_budget = luby(restart_round) * 64;
        let mut conflicts_at_restart = 0u64;

        loop {
            if let Some(ci) = self.propagate() {
                self.conflicts += 1;
                if self.decision_level() == 0 {
                    assert!(
                        self.confirm_unsat_by_propagation(),
                        "internal error: top-level conflict did not re-propagate"
                    );
                    return SolveResult::Unsat;
                }
                let (learnt, bj) = self.analyze(ci);
                self.backjump(bj);
                if learnt.len() == 1 {
                    self.units.push(learnt[0]);
                    let ok = self.enqueue(learnt[0], None);
                    debug_assert!(ok);
                } else {
                    let asserting = learnt[0];
                    let idx = self.add_clause_slot(learnt, true);
                    self.clauses[idx].activity = self.cla_inc;
                    let ok = self.enqueue(asserting, Some(idx));
                    debug_assert!(ok);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;

                if let Some(limit) = budget.conflicts {
                    if self.conflicts > limit {
                        return SolveResult::Unknown(UnknownReason::ConflictLimit);
                    }
                }
                if self.conflicts.is_multiple_of(128) {
                    if let Some(limit) = budget.time {
                        if start.elapsed() >= limit {
                            return SolveResult::Unknown(UnknownReason::Timeout);
                        }
                    }
                }
                if self.conflicts - conflicts_at_restart >= restart_budget {
                    restart_round += 1;
                    restart_budget = luby(restart_round) * 64;
                    conflicts_at_restart = self.conflicts;
                    self.backjump(0);
                }
            } else {
                let live_learnts = self
                    .clauses
                    .iter()
                    .filter(|c| c.learnt && !c.deleted)
                    .count();
                if live_learnts as f64 >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts *= 1.3;
                }
                if !self.decide() {
                    let model =
                        Model::new((0..self.num_vars).map(|v| self.assign[v] == 1).collect());
                    return SolveResult::Sat(model);
                }
            }
        }
    }
}

/// The Luby restart sequence 1, 1, 2, 1, 1, 2, 4, … (0-indexed).
fn luby(mut x: u64) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) / 2;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

/// Max-heap over variables keyed by activity, deterministic via
/// smaller-variable tie-breaking.
struct IndexedHeap {
    heap: Vec<usize>,
    pos: Vec<Option<usize>>,
}

impl IndexedHeap {
    fn new(n: usize) -> IndexedHeap {
        IndexedHeap {
            heap: (0..n).collect(),
            pos: (0..n).map(Some).collect(),
        }
    }

    fn better(a: usize, b: usize, act: &[f64]) -> bool {
        act[a] > act[b] || (act[a] == act[b] && a < b)
    }

    fn sift_up(&mut self, mut i: usize, act: &[f64]) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if Self::better(self.heap[i], self.heap[parent], act) {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize, act: &[f64]) {
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            let mut best = i;
            if l < self.heap.len() && Self::better(self.heap[l], self.heap[best], act) {
                best = l;
            }
            if r < self.heap.len() && Self::better(self.heap[r], self.heap[best], act) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.pos[self.heap[i]] = Some(i);
        self.pos[self.heap[j]] = Some(j);
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.pos[v].is_some() {
            return;
        }
        self.pos[v] = Some(self.heap.len());
        self.heap.push(v);
        self.sift_up(self.heap.len() - 1, act);
    }

    fn update(&mut self, v: usize, act: &[f64]) {
        if let Some(i) = self.pos[v] {
            self.sift_up(i, act);
            self.sift_down(self.pos[v].expect("still present"), act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.len() - 1;
        self.swap(0, last);
        self.heap.pop();
        self.pos[top] = None;
        if !self.heap.is_empty() {
            self.sift_down(0, act);
        }
        Some(top)
    }
}
