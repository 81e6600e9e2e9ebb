//! Machine-readable run reports and the cost-comparison table.

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::anytime::OptimizationLog;
use crate::topology::TopologyReport;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// A self-contained record of one CLI run: the problem identity, the exact
/// configuration, and the command's outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub problem_path: String,
    /// FNV-1a hash of the problem file bytes.
    pub problem_hash: String,
    pub config: serde_json::Value,
    pub elapsed_seconds: f64,
    pub outcome: ReportOutcome,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportOutcome {
    Optimize(OptimizationLog),
    Analyze(TopologyReport),
    Validate {
        valid: bool,
        cost: Option<u64>,
        unmet_goals: Vec<String>,
    },
    Encode {
        variables: u32,
        clauses: usize,
        dimacs_path: String,
        metadata_path: String,
    },
    Unsolvable,
}

impl RunReport {
    pub fn new(
        command: &str,
        problem_path: &Path,
        problem_bytes: &[u8],
        config: serde_json::Value,
        elapsed_seconds: f64,
        outcome: ReportOutcome,
    ) -> RunReport {
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            problem_path: problem_path.display().to_string(),
            problem_hash: crate::hashutil::fnv1a64_hex(problem_bytes),
            config,
            elapsed_seconds,
            outcome,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), ReportError> {
        let text = serde_json::to_string_pretty(self).expect("reports serialize");
        std::fs::write(path, text).map_err(|source| ReportError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// One row of the cost-comparison table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompareRow {
    pub instance: String,
    pub initial_cost: u64,
    pub final_cost: u64,
    pub optimal_proven: bool,
}

/// Extracts comparison rows from optimize reports. Files that are not
/// optimize reports are reported per path, not fatal.
pub fn compare_rows(paths: &[std::path::PathBuf]) -> (Vec<CompareRow>, Vec<ReportError>) {
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for path in paths {
        match read_row(path) {
            Ok(row) => rows.push(row),
            Err(e) => errors.push(e),
        }
    }
    (rows, errors)
}

fn read_row(path: &Path) -> Result<CompareRow, ReportError> {
    let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ReportError::Malformed {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    let missing = |field: &str| ReportError::Malformed {
        path: path.display().to_string(),
        reason: format!("missing field `{field}` (not an optimize report?)"),
    };
    let outcome = value.get("outcome").ok_or_else(|| missing("outcome"))?;
    let instance = value
        .get("problem_path")
        .and_then(|v| v.as_str())
        .ok_or_else(|| missing("problem_path"))?
        .to_string();
    let initial_cost = outcome
        .get("initial_cost")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| missing("outcome.initial_cost"))?;
    let final_cost = outcome
        .get("best_cost")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| missing("outcome.best_cost"))?;
    let optimal_proven = outcome
        .get("optimal_proven")
        .and_then(|v| v.as_bool())
        .ok_or_else(|| missing("outcome.optimal_proven"))?;
    Ok(CompareRow {
        instance,
        initial_cost,
        final_cost,
        optimal_proven,
    })
}

/// Tab-separated comparison table with a header row.
pub fn format_compare_table(rows: &[CompareRow]) -> String {
    let mut out = String::from("instance\tinitial_cost\tfinal_cost\toptimal_proven\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            r.instance, r.initial_cost, r.final_cost, r.optimal_proven
        ));
    }
    out
}
