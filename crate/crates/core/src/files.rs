//! On-disk problem and plan formats.
//!
//! A problem file is JSON: declared variable names, actions with signed
//! literal lists (`"v"` asserts, `"-v"` denies) and nonnegative costs, a
//! total initial assignment, and a goal literal list. A plan file is plain
//! text with one action name per line (`#` starts a comment).

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Action, CostMap, FactoredSystem, Plan, Problem, State, Var};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid name `{name}`: {reason}")]
    BadName { name: String, reason: String },
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("action `{0}` declared twice")]
    DuplicateAction(String),
    #[error("{context}: literal `{literal}` references an undeclared variable")]
    UnknownVariable { context: String, literal: String },
    #[error("{context}: variable `{var}` appears twice")]
    RepeatedVariable { context: String, var: String },
    #[error("init does not assign variable `{0}`")]
    InitNotTotal(String),
    #[error("plan names an unknown action `{0}`")]
    UnknownAction(String),
}

/// JSON shape of a planning problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub variables: Vec<String>,
    pub actions: Vec<ActionEntry>,
    pub init: Vec<String>,
    #[serde(default)]
    pub goal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub name: String,
    #[serde(default)]
    pub pre: Vec<String>,
    #[serde(default)]
    pub eff: Vec<String>,
    pub cost: u64,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-'))
        && !name.starts_with('-')
}

fn check_name(name: &str, what: &str) -> Result<(), FileError> {
    if valid_name(name) {
        Ok(())
    } else {
        Err(FileError::BadName {
            name: name.to_string(),
            reason: format!(
                "{what} names use [A-Za-z0-9_.:-] and cannot start with `-`"
            ),
        })
    }
}

fn parse_literal(raw: &str) -> (bool, &str) {
    match raw.strip_prefix('-') {
        Some(name) => (false, name),
        None => (true, raw),
    }
}

fn literals_to_state(
    literals: &[String],
    declared: &BTreeSet<String>,
    context: &str,
) -> Result<State, FileError> {
    let mut state = State::new();
    for raw in literals {
        let (value, name) = parse_literal(raw);
        if !declared.contains(name) {
            return Err(FileError::UnknownVariable {
                context: context.to_string(),
                literal: raw.clone(),
            });
        }
        let var = Var::new(name);
        if state.get(&var).is_some() {
            return Err(FileError::RepeatedVariable {
                context: context.to_string(),
                var: name.to_string(),
            });
        }
        state.set(var, value);
    }
    Ok(state)
}

/// Parses and checks the file-level invariants: unique valid names, all
/// literals over declared variables, a total initial assignment.
pub fn problem_from_file(file: &ProblemFile) -> Result<Problem, FileError> {
    let mut declared = BTreeSet::new();
    for v in &file.variables {
        check_name(v, "variable")?;
        if !declared.insert(v.clone()) {
            return Err(FileError::DuplicateVariable(v.clone()));
        }
    }

    let mut names = BTreeSet::new();
    let mut actions = Vec::new();
    let mut costs = CostMap::new();
    for entry in &file.actions {
        check_name(&entry.name, "action")?;
        if !names.insert(entry.name.clone()) {
            return Err(FileError::DuplicateAction(entry.name.clone()));
        }
        let pre = literals_to_state(&entry.pre, &declared, &format!("action `{}` pre", entry.name))?;
        let eff = literals_to_state(&entry.eff, &declared, &format!("action `{}` eff", entry.name))?;
        let action = Action::with_label(pre, eff, entry.name.clone());
        actions.push(action.clone());
        costs.insert(action, entry.cost);
    }

    let init = literals_to_state(&file.init, &declared, "init")?;
    for v in &file.variables {
        if init.get(&Var::new(v.as_str())).is_none() {
            return Err(FileError::InitNotTotal(v.clone()));
        }
    }
    let goal = literals_to_state(&file.goal, &declared, "goal")?;

    let system = FactoredSystem::with_vars(actions, declared.iter().map(Var::new));
    Ok(Problem::new(system, costs, init, goal))
}

/// Serializes a problem back to the file shape. Unlabeled actions get
/// positional names. Reading the result reproduces the problem.
pub fn problem_to_file(prob: &Problem) -> ProblemFile {
    let state_to_literals = |s: &State| -> Vec<String> {
        s.iter()
            .map(|(v, b)| if b { v.name().to_string() } else { format!("-{v}") })
            .collect()
    };
    ProblemFile {
        variables: prob.system.vars().iter().map(|v| v.name().to_string()).collect(),
        actions: prob
            .system
            .actions()
            .enumerate()
            .map(|(i, a)| ActionEntry {
                name: a
                    .label()
                    .map(str::to_string)
                    .unwrap_or_else(|| format!("action{i}")),
                pre: state_to_literals(a.pre()),
                eff: state_to_literals(a.eff()),
                cost: prob.costs.get(a).unwrap_or(0),
            })
            .collect(),
        init: state_to_literals(&prob.init),
        goal: state_to_literals(&prob.goal),
    }
}

/// Reads a problem file; returns the problem, the parsed shape, and the
/// raw bytes (for content hashing).
pub fn load_problem(path: &Path) -> Result<(Problem, ProblemFile, Vec<u8>), FileError> {
    let raw = std::fs::read(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ProblemFile = serde_json::from_slice(&raw)?;
    let prob = problem_from_file(&file)?;
    Ok((prob, file, raw))
}

/// Plan file text: one action name per line.
pub fn format_plan(plan: &Plan) -> String {
    let mut out = String::new();
    for a in plan.iter() {
        out.push_str(&a.display_name());
        out.push('\n');
    }
    out
}

/// Parses plan text into action names, skipping blanks and `#` comments.
pub fn parse_plan_names(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Resolves action names against a system's labels.
pub fn plan_from_names(system: &FactoredSystem, names: &[String]) -> Result<Plan, FileError> {
    names
        .iter()
        .map(|n| {
            system
                .actions()
                .find(|a| a.label() == Some(n.as_str()))
                .cloned()
                .ok_or_else(|| FileError::UnknownAction(n.clone()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Plan::new)
}

/// Reads a plan file against a system.
pub fn load_plan(path: &Path, system: &FactoredSystem) -> Result<Plan, FileError> {
    let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    plan_from_names(system, &parse_plan_names(&text))
}
