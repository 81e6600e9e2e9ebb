//! DIMACS CNF reading and writing.

use thiserror::Error;

use super::{Cnf, Lit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimacsError {
    #[error("line {line}: expected `p cnf <vars> <clauses>`, found `{found}`")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: literal before the problem header")]
    MissingHeader { line: usize },
    #[error("line {line}: `{token}` is not a literal")]
    BadLiteral { line: usize, token: String },
    #[error("line {line}: literal {lit} exceeds the declared {vars} variables")]
    OutOfRange { line: usize, lit: i64, vars: u32 },
    #[error("unterminated clause at end of input")]
    UnterminatedClause,
}

/// Standard DIMACS CNF text: `p cnf <vars> <clauses>` header, one
/// 0-terminated clause per line, literals as signed integers.
pub fn emit_dimacs(cnf: &Cnf) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "p cnf {} {}\n",
        cnf.var_count(),
        cnf.clause_count()
    ));
    for clause in cnf.clauses() {
        for lit in clause.lits() {
            out.push_str(&format!("{} ", lit.to_dimacs()));
        }
        out.push_str("0\n");
    }
    out
}

/// Parses DIMACS CNF. Comment lines (`c …`) and `%`-terminated benchmark
/// trailers are ignored; clauses may span lines. Literal sets are
/// normalized exactly like programmatic construction, so
/// `parse(emit(cnf)) == cnf` up to duplicate-literal removal.
pub fn parse_dimacs(text: &str) -> Result<Cnf, DimacsError> {
    let mut cnf: Option<Cnf> = None;
    let mut declared_clauses = 0usize;
    let mut pending: Vec<Lit> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let ok = fields.len() == 4 && fields[0] == "p" && fields[1] == "cnf";
            let header = ok
                .then(|| {
                    Some((
                        fields[2].parse::<u32>().ok()?,
                        fields[3].parse::<usize>().ok()?,
                    ))
                })
                .flatten();
            match header {
                Some((vars, clauses)) => {
                    cnf = Some(Cnf::new(vars));
                    declared_clauses = clauses;
                }
                None => {
                    return Err(DimacsError::BadHeader {
                        line: line_no,
                        found: line.to_string(),
                    })
                }
            }
            continue;
        }
        let cnf = cnf
            .as_mut()
            .ok_or(DimacsError::MissingHeader { line: line_no })?;
        for token in line.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| DimacsError::BadLiteral {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                cnf.add_clause(pending.drain(..));
                continue;
            }
            if value.unsigned_abs() > cnf.var_count() as u64 {
                return Err(DimacsError::OutOfRange {
                    line: line_no,
                    lit: value,
                    vars: cnf.var_count(),
                });
            }
            pending.push(Lit::from_dimacs(value as i32).expect("nonzero checked"));
        }
    }
    if !pending.is_empty() {
        return Err(DimacsError::UnterminatedClause);
    }
    let cnf = cnf.ok_or(DimacsError::MissingHeader { line: 1 })?;
    let _ = declared_clauses; // Informational; tautology removal may shrink it.
    Ok(cnf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_the_exact_format() {
        let mut cnf = Cnf::new(2);
        cnf.add_clause([Lit::new(1, true)]);
        cnf.add_clause([Lit::new(1, false), Lit::new(2, true)]);
        assert_eq!(emit_dimacs(&cnf), "p cnf 2 2\n1 0\n-1 2 0\n");
        assert_eq!(emit_dimacs(&Cnf::new(0)), "p cnf 0 0\n");
    }

    #[test]
    fn parses_simple_instances() {
        let cnf = parse_dimacs("p cnf 2 1\n1 -2 0\n").unwrap();
        assert_eq!(cnf.var_count(), 2);
        assert_eq!(cnf.clause_count(), 1);
        assert_eq!(
            cnf.clauses()[0].lits(),
            &[Lit::new(1, true), Lit::new(2, false)]
        );
    }

    #[test]
    fn skips_comments_and_joins_split_clauses() {
        let cnf = parse_dimacs("c a comment\np cnf 3 1\nc inside\n1 2\n3 0\n").unwrap();
        assert_eq!(cnf.clause_count(), 1);
        assert_eq!(cnf.clauses()[0].len(), 3);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_dimacs("p cnf nope 1\n") {
            Err(DimacsError::BadHeader { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_dimacs("p cnf 1 1\n1 x 0\n") {
            Err(DimacsError::BadLiteral { line: 2, token }) => assert_eq!(token, "x"),
            other => panic!("{other:?}"),
        }
        match parse_dimacs("p cnf 1 1\n5 0\n") {
            Err(DimacsError::OutOfRange { line: 2, lit: 5, vars: 1 }) => {}
            other => panic!("{other:?}"),
        }
        match parse_dimacs("1 0\n") {
            Err(DimacsError::MissingHeader { line: 1 }) => {}
            other => panic!("{other:?}"),
        }
        match parse_dimacs("p cnf 1 1\n1\n") {
            Err(DimacsError::UnterminatedClause) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trips_random_formulas() {
        for seed in 0..200 {
            let cnf = crate::genrand::gen_cnf(&crate::genrand::CnfSpec {
                seed,
                ..Default::default()
            });
            let back = parse_dimacs(&emit_dimacs(&cnf)).unwrap();
            assert_eq!(back, cnf, "round trip failed at seed {seed}");
        }
    }
}
