//! Embedded CDCL satisfiability solving plus DIMACS parsing and an
//! external-solver bridge.

pub mod dimacs;
pub mod external;
mod solver;

use std::fmt;
use std::time::Duration;

use thiserror::Error;

/// A literal: a 1-based variable index with a polarity, stored in DIMACS
/// signed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(i32);

impl Lit {
    /// A literal over variable `var ≥ 1`.
    pub fn new(var: u32, positive: bool) -> Lit {
        assert!(var >= 1, "variables are 1-based");
        Lit(if positive { var as i32 } else { -(var as i32) })
    }

    pub fn from_dimacs(code: i32) -> Option<Lit> {
        if code == 0 {
            None
        } else {
            Some(Lit(code))
        }
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A clause: a set of literals with duplicates removed. Construction
/// rejects tautologies (both polarities of one variable).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause(Vec<Lit>);

impl Clause {
    /// Normalizes and returns the clause, or `None` for a tautology.
    pub fn new<I: IntoIterator<Item = Lit>>(lits: I) -> Option<Clause> {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable_by_key(|l| (l.var(), l.is_positive()));
        lits.dedup();
        for pair in lits.windows(2) {
            if pair[0].var() == pair[1].var() {
                return None;
            }
        }
        Some(Clause(lits))
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A CNF formula: a clause sequence over variables `1 ..= num_vars`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    num_vars: u32,
    clauses: Vec<Clause>,
}

impl Cnf {
    pub fn new(num_vars: u32) -> Cnf {
        Cnf {
            num_vars,
            clauses: Vec::new(),
        }
    }

    /// Adds a clause; tautologies are dropped. Returns whether it was kept.
    ///
    /// Panics if a literal references a variable above `num_vars`.
    pub fn add_clause<I: IntoIterator<Item = Lit>>(&mut self, lits: I) -> bool {
        match Clause::new(lits) {
            Some(c) => {
                for l in c.lits() {
                    assert!(
                        l.var() <= self.num_vars,
                        "literal {l} out of range for {} variables",
                        self.num_vars
                    );
                }
                self.clauses.push(c);
                true
            }
            None => false,
        }
    }

    /// Reserves one more variable and returns its index.
    pub fn fresh_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars
    }

    pub fn var_count(&self) -> u32 {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause_count(&self) -> usize {
        self.clauses.len()
    }
}

/// A total assignment over a formula's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model(Vec<bool>);

impl Model {
    pub fn new(values: Vec<bool>) -> Model {
        Model(values)
    }

    /// Value of variable `var` (1-based).
    pub fn value(&self, var: u32) -> bool {
        self.0[(var - 1) as usize]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn satisfies(&self, lit: Lit) -> bool {
        self.value(lit.var()) == lit.is_positive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("model covers {model} variables but the formula has {formula}")]
pub struct PartialModelError {
    pub model: usize,
    pub formula: u32,
}

/// True iff every clause has a satisfied literal. A model that does not
/// cover every formula variable is an error, not a verdict.
pub fn check_model(cnf: &Cnf, model: &Model) -> Result<bool, PartialModelError> {
    if (model.len() as u32) < cnf.var_count() {
        return Err(PartialModelError {
            model: model.len(),
            formula: cnf.var_count(),
        });
    }
    Ok(cnf
        .clauses()
        .iter()
        .all(|c| c.lits().iter().any(|&l| model.satisfies(l))))
}

/// Why a solve run ended without an answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    ConflictLimit,
    ExternalFailure(String),
}

impl fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnknownReason::Timeout => write!(f, "time budget exhausted"),
            UnknownReason::ConflictLimit => write!(f, "conflict budget exhausted"),
            UnknownReason::ExternalFailure(msg) => write!(f, "external solver failure: {msg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    Unknown(UnknownReason),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat)
    }
}

/// Resource budget for one solve call. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub time: Option<Duration>,
    pub conflicts: Option<u64>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        time: None,
        conflicts: None,
    };

    pub fn with_time(time: Duration) -> Budget {
        Budget {
            time: Some(time),
            ..Budget::UNLIMITED
        }
    }
}

/// Solves with the embedded CDCL solver. SAT models are verified with
/// [`check_model`] before being returned; UNSAT is re-checked by a fresh
/// propagation pass over the final clause database.
pub fn solve_cnf(cnf: &Cnf, budget: Budget) -> SolveResult {
    let result = solver::Solver::new(cnf).solve(budget);
    if let SolveResult::Sat(model) = &result {
        assert!(
            check_model(cnf, model).expect("solver models are total"),
            "internal error: solver produced a non-model"
        );
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(code: i32) -> Lit {
        Lit::from_dimacs(code).unwrap()
    }

    #[test]
    fn clause_normalization() {
        let c = Clause::new([lit(3), lit(-2), lit(3)]).unwrap();
        assert_eq!(c.lits(), &[lit(-2), lit(3)]);
        assert!(Clause::new([lit(1), lit(-1)]).is_none(), "tautology dropped");
    }

    #[test]
    fn direct_contradiction_is_unsat() {
        let mut cnf = Cnf::new(1);
        cnf.add_clause([lit(1)]);
        cnf.add_clause([lit(-1)]);
        assert!(solve_cnf(&cnf, Budget::UNLIMITED).is_unsat());
    }

    #[test]
    fn unit_propagation_finds_the_model() {
        let mut cnf = Cnf::new(2);
        cnf.add_clause([lit(1), lit(2)]);
        cnf.add_clause([lit(-1)]);
        match solve_cnf(&cnf, Budget::UNLIMITED) {
            SolveResult::Sat(m) => {
                assert!(!m.value(1));
                assert!(m.value(2));
            }
            other => panic!("expected SAT, got {other:?}"),
        }
    }

    #[test]
    fn empty_formula_is_sat_and_empty_clause_unsat() {
        let cnf = Cnf::new(0);
        assert!(solve_cnf(&cnf, Budget::UNLIMITED).is_sat());

        let mut cnf = Cnf::new(1);
        cnf.add_clause::<[Lit; 0]>([]);
        assert!(solve_cnf(&cnf, Budget::UNLIMITED).is_unsat());
    }

    #[test]
    fn check_model_examples() {
        let cnf = Cnf::new(0);
        assert!(check_model(&cnf, &Model::new(vec![])).unwrap());

        let mut cnf = Cnf::new(1);
        cnf.add_clause([lit(1)]);
        assert!(!check_model(&cnf, &Model::new(vec![false])).unwrap());
        assert!(check_model(&cnf, &Model::new(vec![true])).unwrap());
        assert!(check_model(&cnf, &Model::new(vec![])).is_err());
    }

    #[test]
    fn conflict_budget_reports_unknown() {
        // A formula large enough to take more than zero conflicts.
        let cnf = crate::genrand::gen_cnf(&crate::genrand::CnfSpec {
            var_count: (12, 12),
            clause_factor: 4.3,
            seed: 5,
            ..Default::default()
        });
        let budget = Budget {
            conflicts: Some(0),
            time: None,
        };
        match solve_cnf(&cnf, budget) {
            SolveResult::Unknown(UnknownReason::ConflictLimit) => {}
            // Unit propagation alone may settle tiny instances.
            SolveResult::Sat(_) | SolveResult::Unsat => {}
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn agrees_with_truth_table_on_random_formulas() {
        for seed in 0..400 {
            let cnf = crate::genrand::gen_cnf(&crate::genrand::CnfSpec {
                var_count: (1, 14),
                clause_factor: 4.0,
                seed,
                ..Default::default()
            });
            let expected = crate::oracles::sat_by_truth_table(&cnf);
            let got = solve_cnf(&cnf, Budget::UNLIMITED);
            match (expected, got) {
                (true, SolveResult::Sat(_)) | (false, SolveResult::Unsat) => {}
                (exp, got) => panic!("seed {seed}: oracle {exp}, solver {got:?}"),
            }
        }
    }

    #[test]
    fn deterministic_across_runs() {
        for seed in [3, 17, 99] {
            let cnf = crate::genrand::gen_cnf(&crate::genrand::CnfSpec {
                var_count: (18, 18),
                clause_factor: 4.2,
                seed,
                ..Default::default()
            });
            let a = solve_cnf(&cnf, Budget::UNLIMITED);
            let b = solve_cnf(&cnf, Budget::UNLIMITED);
            assert_eq!(a, b);
        }
    }
}
