//! Bridge to external SAT solvers over the DIMACS subprocess protocol.
//!
//! The solver command gets the CNF as a file path argument and must print
//! `s SATISFIABLE` or `s UNSATISFIABLE` plus, when satisfiable,
//! 0-terminated `v ` value lines. SAT answers are verified against the
//! formula; anything unverifiable degrades to `Unknown`, never to a wrong
//! verdict. External UNSAT answers are trusted as delivered.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Duration;

use super::dimacs::emit_dimacs;
use super::{check_model, Budget, Cnf, Model, SolveResult, UnknownReason};

/// Environment variable consulted for the default external solver command.
pub const SOLVER_ENV_VAR: &str = "COSTSAT_SOLVER";

/// The external solver configured in the environment, if any.
pub fn default_external_command() -> Option<String> {
    std::env::var(SOLVER_ENV_VAR).ok().filter(|s| !s.is_empty())
}

/// Runs `command <cnf-file>` on the formula and parses the verdict.
pub fn solve_external(cnf: &Cnf, command: &str, budget: Budget) -> SolveResult {
    let fail = |msg: String| SolveResult::Unknown(UnknownReason::ExternalFailure(msg));

    let mut parts = command.split_whitespace();
    let Some(program) = parts.next() else {
        return fail("empty solver command".to_string());
    };
    let args: Vec<&str> = parts.collect();

    let mut file = match tempfile::Builder::new().suffix(".cnf").tempfile() {
        Ok(f) => f,
        Err(e) => return fail(format!("cannot create CNF temp file: {e}")),
    };
    if let Err(e) = file.write_all(emit_dimacs(cnf).as_bytes()) {
        return fail(format!("cannot write CNF temp file: {e}"));
    }

    let mut child = match Command::new(program)
        .args(&args)
        .arg(file.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return fail(format!("cannot spawn `{program}`: {e}")),
    };

    let output = match wait_with_deadline(&mut child, budget.time) {
        Ok(Some(out)) => out,
        Ok(None) => {
            let _ = child.kill();
            let _ = child.wait();
            return SolveResult::Unknown(UnknownReason::Timeout);
        }
        Err(e) => return fail(format!("waiting for solver failed: {e}")),
    };

    match parse_solver_output(&output) {
        Some(SolverVerdict::Unsat) => SolveResult::Unsat,
        Some(SolverVerdict::Sat(values)) => {
            let model = match complete_model(cnf, &values) {
                Some(m) => m,
                None => return fail("value lines do not cover the formula".to_string()),
            };
            match check_model(cnf, &model) {
                Ok(true) => SolveResult::Sat(model),
                Ok(false) => fail("reported model does not satisfy the formula".to_string()),
                Err(e) => fail(e.to_string()),
            }
        }
        None => fail("no `s SATISFIABLE`/`s UNSATISFIABLE` status line".to_string()),
    }
}

fn wait_with_deadline(
    child: &mut std::process::Child,
    limit: Option<Duration>,
) -> std::io::Result<Option<String>> {
    use std::io::Read;
    let Some(limit) = limit else {
        let mut out = String::new();
        child
            .stdout
            .take()
            .expect("stdout piped")
            .read_to_string(&mut out)?;
        child.wait()?;
        return Ok(Some(out));
    };
    // Reader thread so a chatty solver cannot block on a full pipe.
    let mut stdout = child.stdout.take().expect("stdout piped");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });
    let deadline = std::time::Instant::now() + limit;
    loop {
        if child.try_wait()?.is_some() {
            return Ok(Some(reader.join().unwrap_or_default()));
        }
        if std::time::Instant::now() >= deadline {
            return Ok(None);
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

enum SolverVerdict {
    Sat(Vec<i64>),
    Unsat,
}

fn parse_solver_output(output: &str) -> Option<SolverVerdict> {
    let mut sat: Option<bool> = None;
    let mut values: Vec<i64> = Vec::new();
    for line in output.lines() {
        let line = line.trim();
        if let Some(status) = line.strip_prefix("s ") {
            match status.trim() {
                "SATISFIABLE" => sat = Some(true),
                "UNSATISFIABLE" => sat = Some(false),
                _ => {}
            }
        } else if let Some(vals) = line.strip_prefix("v ") {
            for token in vals.split_whitespace() {
                if let Ok(v) = token.parse::<i64>() {
                    if v != 0 {
                        values.push(v);
                    }
                }
            }
        }
    }
    match sat? {
        true => Some(SolverVerdict::Sat(values)),
        false => Some(SolverVerdict::Unsat),
    }
}

/// Builds a total model from value-line literals; unmentioned variables
/// default to false.
fn complete_model(cnf: &Cnf, values: &[i64]) -> Option<Model> {
    let n = cnf.var_count() as usize;
    let mut assignment = vec![false; n];
    for &v in values {
        let var = v.unsigned_abs() as usize;
        if var == 0 || var > n {
            return None;
        }
        assignment[var - 1] = v > 0;
    }
    Some(Model::new(assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::Lit;

    #[test]
    fn parses_value_lines() {
        let out = "c comment\ns SATISFIABLE\nv 1 -2\nv 3 0\n";
        match parse_solver_output(out) {
            Some(SolverVerdict::Sat(vals)) => assert_eq!(vals, vec![1, -2, 3]),
            _ => panic!("expected SAT verdict"),
        }
        assert!(matches!(
            parse_solver_output("s UNSATISFIABLE\n"),
            Some(SolverVerdict::Unsat)
        ));
        assert!(parse_solver_output("nothing useful\n").is_none());
    }

    #[test]
    fn missing_binary_degrades_to_unknown() {
        let mut cnf = Cnf::new(1);
        cnf.add_clause([Lit::new(1, true)]);
        match solve_external(&cnf, "definitely-not-a-solver-binary", Budget::UNLIMITED) {
            SolveResult::Unknown(UnknownReason::ExternalFailure(_)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lying_solver_is_not_trusted_with_sat() {
        // `true` exits 0 with no output: no status line, so Unknown.
        let mut cnf = Cnf::new(1);
        cnf.add_clause([Lit::new(1, true)]);
        match solve_external(&cnf, "true", Budget::UNLIMITED) {
            SolveResult::Unknown(UnknownReason::ExternalFailure(_)) => {}
            other => panic!("{other:?}"),
        }
    }
}
