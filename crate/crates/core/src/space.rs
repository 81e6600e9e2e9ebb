//! Bitmask-compiled view of a factored system for explicit state-space
//! work. States over n ≤ 63 variables are `u64` assignments; actions become
//! mask/value pairs so applicability and execution are a handful of bitwise
//! ops. All orderings come from the deterministic `Var`/`Action` orders.

use crate::model::{Action, FactoredSystem, State, Var};

#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub vars: Vec<Var>,
    pub actions: Vec<Action>,
    pre_mask: Vec<u64>,
    pre_val: Vec<u64>,
    eff_mask: Vec<u64>,
    eff_val: Vec<u64>,
}

impl Compiled {
    /// Compiles a system whose universe fits in a machine word. Returns the
    /// actual variable count on overflow.
    pub fn compile(sys: &FactoredSystem) -> Result<Compiled, usize> {
        let vars: Vec<Var> = sys.vars().iter().cloned().collect();
        if vars.len() > 63 {
            return Err(vars.len());
        }
        let actions: Vec<Action> = sys.actions().cloned().collect();
        let index = |v: &Var| vars.binary_search(v).expect("var in universe");
        let mut pre_mask = Vec::with_capacity(actions.len());
        let mut pre_val = Vec::with_capacity(actions.len());
        let mut eff_mask = Vec::with_capacity(actions.len());
        let mut eff_val = Vec::with_capacity(actions.len());
        for a in &actions {
            let (pm, pv) = encode_partial_with(&index, a.pre());
            let (em, ev) = encode_partial_with(&index, a.eff());
            pre_mask.push(pm);
            pre_val.push(pv);
            eff_mask.push(em);
            eff_val.push(ev);
        }
        Ok(Compiled {
            vars,
            actions,
            pre_mask,
            pre_val,
            eff_mask,
            eff_val,
        })
    }

    #[allow(dead_code)] // test oracles
    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    /// Number of valid states, `2^n`.
    pub fn state_count(&self) -> usize {
        1usize << self.vars.len()
    }

    pub fn applicable(&self, action: usize, s: u64) -> bool {
        s & self.pre_mask[action] == self.pre_val[action]
    }

    /// Successor under an applicable action. Callers check applicability.
    pub fn apply(&self, action: usize, s: u64) -> u64 {
        (s & !self.eff_mask[action]) | self.eff_val[action]
    }

    /// Execution semantics including the no-op branch.
    #[allow(dead_code)] // test oracles
    pub fn execute(&self, action: usize, s: u64) -> u64 {
        if self.applicable(action, s) {
            self.apply(action, s)
        } else {
            s
        }
    }

    /// Applicable `(action, successor)` pairs out of `s`, in action order.
    pub fn successors(&self, s: u64) -> impl Iterator<Item = (usize, u64)> + '_ {
        (0..self.actions.len())
            .filter(move |&i| self.applicable(i, s))
            .map(move |i| (i, self.apply(i, s)))
    }

    pub fn encode_full_state(&self, s: &State) -> Option<u64> {
        if s.len() != self.vars.len() {
            return None;
        }
        let mut bits = 0u64;
        for (i, v) in self.vars.iter().enumerate() {
            match s.get(v) {
                Some(true) => bits |= 1 << i,
                Some(false) => {}
                None => return None,
            }
        }
        Some(bits)
    }

    /// Mask/value encoding of a partial state; `None` if it mentions a
    /// variable outside the universe.
    pub fn encode_partial_state(&self, s: &State) -> Option<(u64, u64)> {
        let mut mask = 0u64;
        let mut val = 0u64;
        for (v, b) in s.iter() {
            let i = self.vars.binary_search(v).ok()?;
            mask |= 1 << i;
            if b {
                val |= 1 << i;
            }
        }
        Some((mask, val))
    }

    pub fn decode_state(&self, bits: u64) -> State {
        State::from_pairs(
            self.vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), bits & (1 << i) != 0)),
        )
    }

    /// States reachable from `start` by applicable actions, as a bitset
    /// indexed by state value.
    pub fn reachable_from(&self, start: u64) -> Vec<bool> {
        let mut seen = vec![false; self.state_count()];
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(s) = stack.pop() {
            for (_, t) in self.successors(s) {
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        seen
    }
}

fn encode_partial_with(index: &impl Fn(&Var) -> usize, s: &State) -> (u64, u64) {
    let mut mask = 0u64;
    let mut val = 0u64;
    for (v, b) in s.iter() {
        let i = index(v);
        mask |= 1 << i;
        if b {
            val |= 1 << i;
        }
    }
    (mask, val)
}
