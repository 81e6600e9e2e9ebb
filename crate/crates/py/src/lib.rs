//! Python bindings: the problem type and the main pipeline operations,
//! driven in-process from Python.
//!
//! ```python
//! import costsat_py as cs
//! prob = cs.Problem.from_json(open("problem.json").read())
//! print(prob.analyze())
//! result = prob.optimize()
//! print(result["best_cost"], result["optimal_proven"])
//! ```

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use costsat::anytime::{
    initial_plan, optimize, oracle_optimal_cost, solve_bounded, InitialStrategy, SearchOutcome,
    SolveConfig,
};
use costsat::encode::{emit_dimacs, encode_bounded, metadata_file, EncodeOptions};
use costsat::files::{plan_from_names, problem_from_file, problem_to_file, ProblemFile};
use costsat::genrand::{gen_problem, gen_unsolvable_problem, CostMode, GenSpec};
use costsat::model::{is_solution, plan_cost, validate_problem, Plan};
use costsat::sat::{dimacs::parse_dimacs, solve_cnf, Budget, SolveResult};
use costsat::topology::{analyze, completeness_threshold, BoundMode, TopologyCaps};

fn usage_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn internal_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                u.into_py_any(py)?
            } else if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?
            }
        }
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, v) in map {
                dict.set_item(k, json_to_py(py, v)?)?;
            }
            dict.into_py_any(py)?
        }
    })
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(internal_err)?;
    json_to_py(py, &json)
}

fn parse_bound_mode(horizon: &str, supplied: Option<u64>) -> PyResult<BoundMode> {
    match (horizon, supplied) {
        ("exact", None) => Ok(BoundMode::Exact),
        ("trivial", None) => Ok(BoundMode::Trivial),
        ("supplied", Some(n)) => Ok(BoundMode::Supplied(n)),
        ("supplied", None) => Err(usage_err("horizon \"supplied\" needs supplied_bound=N")),
        (other, _) => Err(usage_err(format!(
            "unknown horizon source `{other}`; expected exact, trivial, or supplied"
        ))),
    }
}

fn parse_strategy(s: &str) -> PyResult<InitialStrategy> {
    match s {
        "greedy" => Ok(InitialStrategy::Greedy),
        "uniform-cost" | "uniform_cost" => Ok(InitialStrategy::UniformCost),
        other => Err(usage_err(format!(
            "unknown strategy `{other}`; expected greedy or uniform-cost"
        ))),
    }
}

/// A planning problem: actions with costs, an initial state, and a goal.
#[pyclass(name = "Problem")]
struct PyProblem {
    inner: costsat::model::Problem,
}

impl PyProblem {
    fn resolve_plan(&self, names: Vec<String>) -> PyResult<Plan> {
        plan_from_names(&self.inner.system, &names).map_err(usage_err)
    }
}

#[pymethods]
impl PyProblem {
    /// Parses the JSON problem format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(usage_err)?;
        let inner = problem_from_file(&file).map_err(usage_err)?;
        Ok(PyProblem { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&problem_to_file(&self.inner)).map_err(internal_err)
    }

    fn var_count(&self) -> usize {
        self.inner.system.var_count()
    }

    fn action_count(&self) -> usize {
        self.inner.system.action_count()
    }

    /// Well-formedness defects as strings; empty means valid.
    fn validate(&self) -> Vec<String> {
        validate_problem(&self.inner)
            .iter()
            .map(|d| d.to_string())
            .collect()
    }

    /// State-space metrics as a dict; capped-out metrics come back None.
    #[pyo3(signature = (witness_vertex_cap = 16))]
    fn analyze(&self, py: Python<'_>, witness_vertex_cap: usize) -> PyResult<Py<PyAny>> {
        let caps = TopologyCaps {
            sublist_vertices: witness_vertex_cap,
            ..TopologyCaps::default()
        };
        serialize_to_py(py, &analyze(&self.inner.system, &caps))
    }

    /// Exhaustive-search optimal cost, or None when unsolvable.
    fn optimal_cost(&self) -> PyResult<Option<u64>> {
        oracle_optimal_cost(&self.inner, &TopologyCaps::default()).map_err(usage_err)
    }

    /// A first verified plan (as action names), or None when unsolvable.
    #[pyo3(signature = (strategy = "greedy"))]
    fn initial_plan(&self, strategy: &str) -> PyResult<Option<Vec<String>>> {
        let strategy = parse_strategy(strategy)?;
        match initial_plan(&self.inner, strategy, &TopologyCaps::default()).map_err(usage_err)? {
            SearchOutcome::Plan(p) => Ok(Some(p.iter().map(|a| a.display_name()).collect())),
            SearchOutcome::Unsolvable => Ok(None),
        }
    }

    /// Checks a plan given as action names.
    fn validate_plan(&self, py: Python<'_>, names: Vec<String>) -> PyResult<Py<PyAny>> {
        let plan = self.resolve_plan(names)?;
        let valid = is_solution(&self.inner, &plan);
        let cost = plan_cost(&self.inner.costs, &plan).ok();
        let dict = PyDict::new(py);
        dict.set_item("valid", valid)?;
        dict.set_item("cost", cost)?;
        dict.into_py_any(py)
    }

    /// One cost-bounded query at a fixed horizon: a plan (as names) or
    /// None when provably no plan of that cost exists within the horizon.
    fn solve_bounded(&self, cost_bound: u64, horizon: u64) -> PyResult<Option<Vec<String>>> {
        let cfg = SolveConfig {
            caps: TopologyCaps::test_scale(),
            ..Default::default()
        };
        match solve_bounded(&self.inner, cost_bound, horizon, &cfg) {
            Ok(Some(plan)) => Ok(Some(plan.iter().map(|a| a.display_name()).collect())),
            Ok(None) => Ok(None),
            Err(e) => Err(internal_err(e)),
        }
    }

    /// The completeness threshold for a current plan.
    #[pyo3(signature = (plan, horizon = "exact", supplied_bound = None))]
    fn completeness_threshold(
        &self,
        py: Python<'_>,
        plan: Vec<String>,
        horizon: &str,
        supplied_bound: Option<u64>,
    ) -> PyResult<Py<PyAny>> {
        let plan = self.resolve_plan(plan)?;
        let mode = parse_bound_mode(horizon, supplied_bound)?;
        let ct = completeness_threshold(&self.inner, &plan, mode, &TopologyCaps::test_scale())
            .map_err(usage_err)?;
        serialize_to_py(py, &ct)
    }

    /// Runs the any-time loop and returns the full log as a dict.
    #[pyo3(signature = (
        initial = None,
        strategy = "greedy",
        time_budget = None,
        gcd_scaling = true,
        factoring = true,
        horizon = "exact",
        supplied_bound = None,
        seed = 0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn optimize(
        &self,
        py: Python<'_>,
        initial: Option<Vec<String>>,
        strategy: &str,
        time_budget: Option<f64>,
        gcd_scaling: bool,
        factoring: bool,
        horizon: &str,
        supplied_bound: Option<u64>,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let initial = match initial {
            Some(names) => self.resolve_plan(names)?,
            None => {
                match initial_plan(&self.inner, parse_strategy(strategy)?, &TopologyCaps::default())
                    .map_err(usage_err)?
                {
                    SearchOutcome::Plan(p) => p,
                    SearchOutcome::Unsolvable => {
                        return Err(usage_err("the problem is unsolvable"))
                    }
                }
            }
        };
        let cfg = SolveConfig {
            time_budget: time_budget.map(std::time::Duration::from_secs_f64),
            gcd_scaling,
            factoring,
            horizon_source: parse_bound_mode(horizon, supplied_bound)?,
            caps: TopologyCaps::test_scale(),
            seed,
            ..Default::default()
        };
        let log = optimize(&self.inner, initial, &cfg).map_err(internal_err)?;
        serialize_to_py(py, &log)
    }

    /// The cost-bounded CNF at a horizon: `(dimacs_text, metadata_json)`.
    fn encode(&self, cost_bound: u64, horizon: u64) -> PyResult<(String, String)> {
        let ap = costsat::augment::augment_problem(&self.inner, cost_bound).map_err(usage_err)?;
        let system = costsat::augment::factor_actions(&ap.augmented.system);
        let enc = costsat::model::Problem::new(
            system,
            ap.augmented.costs.clone(),
            ap.augmented.init.clone(),
            ap.augmented.goal.clone(),
        );
        let (cnf, meta) =
            encode_bounded(&enc, horizon, &EncodeOptions::default()).map_err(usage_err)?;
        let sidecar = serde_json::to_string_pretty(&metadata_file(&meta, &cnf))
            .map_err(internal_err)?;
        Ok((emit_dimacs(&cnf), sidecar))
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem({} variables, {} actions)",
            self.inner.system.var_count(),
            self.inner.system.action_count()
        )
    }
}

/// Deterministic random problem generation.
#[pyfunction]
#[pyo3(signature = (
    seed = 0,
    vars = (2, 4),
    actions = (1, 6),
    cost_mode = "with-zero",
    zero_prob = 0.2,
    max_cost = 3,
    unsolvable = false,
))]
fn generate(
    seed: u64,
    vars: (usize, usize),
    actions: (usize, usize),
    cost_mode: &str,
    zero_prob: f64,
    max_cost: u64,
    unsolvable: bool,
) -> PyResult<PyProblem> {
    let cost_mode = match cost_mode {
        "unit" => CostMode::AllUnit,
        "no-zero" | "no_zero" => CostMode::NoZero {
            min: 1,
            max: max_cost,
        },
        "with-zero" | "with_zero" => CostMode::WithZero {
            zero_prob,
            max: max_cost,
        },
        other => return Err(usage_err(format!("unknown cost mode `{other}`"))),
    };
    let spec = GenSpec {
        var_count: vars,
        action_count: actions,
        cost_mode,
        seed,
        ..Default::default()
    };
    let inner = if unsolvable {
        gen_unsolvable_problem(&spec)
            .ok_or_else(|| usage_err("every state is reachable for this seed"))?
    } else {
        gen_problem(&spec)
    };
    Ok(PyProblem { inner })
}

/// Solves DIMACS CNF text with the embedded solver. Returns a dict with
/// `status` (sat/unsat/unknown) and, when sat, the `model` as a bool list.
#[pyfunction]
#[pyo3(signature = (text, time_budget = None))]
fn solve_dimacs(py: Python<'_>, text: &str, time_budget: Option<f64>) -> PyResult<Py<PyAny>> {
    let cnf = parse_dimacs(text).map_err(usage_err)?;
    let budget = Budget {
        time: time_budget.map(std::time::Duration::from_secs_f64),
        conflicts: None,
    };
    let dict = PyDict::new(py);
    match solve_cnf(&cnf, budget) {
        SolveResult::Sat(model) => {
            dict.set_item("status", "sat")?;
            let values: Vec<bool> = (1..=cnf.var_count()).map(|v| model.value(v)).collect();
            dict.set_item("model", values)?;
        }
        SolveResult::Unsat => dict.set_item("status", "unsat")?,
        SolveResult::Unknown(reason) => {
            dict.set_item("status", "unknown")?;
            dict.set_item("reason", reason.to_string())?;
        }
    }
    dict.into_py_any(py)
}

#[pymodule]
fn costsat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_dimacs, m)?)?;
    Ok(())
}
