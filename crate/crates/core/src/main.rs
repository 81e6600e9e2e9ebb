//! Command-line interface: problem ingestion, analysis, encoding, solving,
//! optimization, plan validation, and report comparison.
//!
//! Exit codes are a stable contract: 0 optimal proven (or plain success),
//! 1 improved without proof, 2 no improvement / invalid plan verdict,
//! 3 unsolvable, 4 usage or input errors, 5 internal errors. The
//! `solve-dimacs` subcommand follows SAT-solver conventions instead
//! (10 SAT, 20 UNSAT, 30 unknown).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use costsat::anytime::{
    initial_plan, optimize, InitialStrategy, IterationOutcome, SearchOutcome, SolveConfig,
    SolverChoice,
};
use costsat::augment::{augment_problem, factor_actions};
use costsat::encode::{emit_dimacs, encode_bounded, metadata_file, AmoEncoding, EncodeOptions};
use costsat::files::{
    format_plan, load_plan, load_problem, parse_plan_names, plan_from_names, problem_to_file,
};
use costsat::genrand::{gen_problem, gen_unsolvable_problem, CostMode, GenSpec};
use costsat::model::{execute_sequence, is_solution, plan_cost, validate_problem, Problem};
use costsat::report::{compare_rows, format_compare_table, ReportOutcome, RunReport};
use costsat::sat::{dimacs::parse_dimacs, solve_cnf, Budget, SolveResult};
use costsat::topology::{analyze, BoundMode, TopologyCaps};

const EXIT_OPTIMAL: u8 = 0;
const EXIT_IMPROVED: u8 = 1;
const EXIT_UNCHANGED: u8 = 2;
const EXIT_UNSOLVABLE: u8 = 3;
const EXIT_USAGE: u8 = 4;
const EXIT_INTERNAL: u8 = 5;

#[derive(Parser)]
#[command(
    name = "costsat",
    version,
    about = "Cost-optimal planning as satisfiability with completeness-threshold horizons"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute state-space metrics and completeness-threshold candidates.
    Analyze(AnalyzeArgs),
    /// Iteratively improve plan cost until optimality is proven.
    Optimize(OptimizeArgs),
    /// Emit the cost-bounded CNF and its variable-map sidecar.
    Encode(EncodeArgs),
    /// Check a plan file against a problem.
    Validate(ValidateArgs),
    /// Tabulate initial vs. final costs across optimize reports.
    CompareCosts(CompareArgs),
    /// Solve a DIMACS CNF file with the embedded solver.
    SolveDimacs(SolveDimacsArgs),
    /// Generate a random problem file.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct CapArgs {
    /// Variable cap for state-space expansion, diameter, traversal diameter.
    #[arg(long, default_value_t = 16)]
    cap_state_vars: usize,
    /// Variable cap for the recurrence diameter.
    #[arg(long, default_value_t = 12)]
    cap_rd_vars: usize,
    /// State-space vertex cap for sublist/subset diameter search.
    #[arg(long, default_value_t = 8)]
    cap_witness_vertices: usize,
    /// Action cap for sublist/subset diameter search.
    #[arg(long, default_value_t = 12)]
    cap_witness_actions: usize,
}

impl CapArgs {
    fn caps(&self) -> TopologyCaps {
        TopologyCaps {
            state_space_vars: self.cap_state_vars,
            recurrence_vars: self.cap_rd_vars,
            sublist_vertices: self.cap_witness_vertices,
            sublist_actions: self.cap_witness_actions,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Start from this plan file instead of searching for one.
    #[arg(long)]
    initial_plan: Option<PathBuf>,
    /// Search strategy for the initial plan: greedy | uniform-cost.
    #[arg(long, default_value = "greedy", value_parser = parse_strategy)]
    initial_strategy: InitialStrategy,
    /// Horizon for problems with 0-cost actions: exact | trivial | supplied=N.
    #[arg(long, default_value = "exact", value_parser = parse_bound_mode)]
    horizon_source: BoundMode,
    /// SAT backend: embedded | external | external=CMD.
    #[arg(long, default_value = "embedded", value_parser = parse_solver)]
    solver: SolverChoice,
    /// Overall wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Seed recorded in reports (the embedded solver is deterministic).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the best plan here.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Disable division of costs by their gcd.
    #[arg(long)]
    no_gcd_scaling: bool,
    /// Disable action factoring of the augmented system.
    #[arg(long)]
    no_factoring: bool,
    /// At-most-one encoding: pairwise | sequential.
    #[arg(long, default_value = "pairwise", value_parser = parse_amo)]
    amo: AmoEncoding,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Args)]
struct EncodeArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Cost budget compiled into the counter.
    #[arg(long)]
    cost_bound: u64,
    /// Step horizon of the encoding.
    #[arg(long)]
    horizon: u64,
    /// Output DIMACS path.
    #[arg(short, long)]
    out: PathBuf,
    /// Sidecar metadata path (default: OUT with .meta.json).
    #[arg(long)]
    meta: Option<PathBuf>,
    #[arg(long)]
    no_factoring: bool,
    #[arg(long, default_value = "pairwise", value_parser = parse_amo)]
    amo: AmoEncoding,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Plan file (one action name per line).
    plan: PathBuf,
    /// Write a JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Optimize report files.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
}

#[derive(Args)]
struct SolveDimacsArgs {
    /// DIMACS CNF file.
    cnf: PathBuf,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    /// Seed for deterministic generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variable count range, e.g. 2..4.
    #[arg(long, default_value = "2..4", value_parser = parse_range)]
    vars: (usize, usize),
    /// Action count range, e.g. 1..6.
    #[arg(long, default_value = "1..6", value_parser = parse_range)]
    actions: (usize, usize),
    /// Cost regime: unit | no-zero | with-zero.
    #[arg(long, default_value = "with-zero")]
    cost_mode: String,
    /// Probability of a 0-cost action under with-zero.
    #[arg(long, default_value_t = 0.2)]
    zero_prob: f64,
    /// Maximum action cost.
    #[arg(long, default_value_t = 3)]
    max_cost: u64,
    /// Make the goal unreachable instead of walk-derived.
    #[arg(long)]
    unsolvable: bool,
    /// Read the full generator spec from a JSON file instead of flags.
    #[arg(long)]
    spec_json: Option<PathBuf>,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<InitialStrategy, String> {
    match s {
        "greedy" => Ok(InitialStrategy::Greedy),
        "uniform-cost" => Ok(InitialStrategy::UniformCost),
        _ => Err("expected `greedy` or `uniform-cost`".to_string()),
    }
}

fn parse_bound_mode(s: &str) -> Result<BoundMode, String> {
    match s {
        "exact" => Ok(BoundMode::Exact),
        "trivial" => Ok(BoundMode::Trivial),
        _ => match s.strip_prefix("supplied=") {
            Some(n) => n
                .parse::<u64>()
                .map(BoundMode::Supplied)
                .map_err(|e| format!("bad supplied bound: {e}")),
            None => Err("expected `exact`, `trivial`, or `supplied=N`".to_string()),
        },
    }
}

fn parse_solver(s: &str) -> Result<SolverChoice, String> {
    match s {
        "embedded" => Ok(SolverChoice::Embedded),
        "external" => costsat::sat::external::default_external_command()
            .map(SolverChoice::External)
            .ok_or_else(|| {
                format!(
                    "`external` needs the {} environment variable or `external=CMD`",
                    costsat::sat::external::SOLVER_ENV_VAR
                )
            }),
        _ => match s.strip_prefix("external=") {
            Some(cmd) if !cmd.is_empty() => Ok(SolverChoice::External(cmd.to_string())),
            _ => Err("expected `embedded`, `external`, or `external=CMD`".to_string()),
        },
    }
}

fn parse_amo(s: &str) -> Result<AmoEncoding, String> {
    match s {
        "pairwise" => Ok(AmoEncoding::Pairwise),
        "sequential" => Ok(AmoEncoding::SequentialCounter),
        _ => Err("expected `pairwise` or `sequential`".to_string()),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once("..").ok_or("expected LO..HI")?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("bad range end: {e}"))?;
    if lo > hi {
        return Err("range start exceeds end".to_string());
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Keep clap's rendering but pin usage errors to the contract.
            let help = e.kind() == clap::error::ErrorKind::DisplayHelp
                || e.kind() == clap::error::ErrorKind::DisplayVersion;
            let _ = e.print();
            return if help {
                ExitCode::from(EXIT_OPTIMAL)
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    let code = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Validate(args) => cmd_validate(args),
        Command::CompareCosts(args) => cmd_compare(args),
        Command::SolveDimacs(args) => cmd_solve_dimacs(args),
        Command::Gen(args) => cmd_gen(args),
    };
    ExitCode::from(code)
}

fn fail(code: u8, msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    code
}

fn load_validated(path: &Path) -> Result<(Problem, Vec<u8>), u8> {
    let (prob, _, raw) = load_problem(path).map_err(|e| fail(EXIT_USAGE, e))?;
    let defects = validate_problem(&prob);
    if !defects.is_empty() {
        for d in &defects {
            eprintln!("defect: {d}");
        }
        return Err(EXIT_USAGE);
    }
    Ok((prob, raw))
}

fn cmd_analyze(args: AnalyzeArgs) -> u8 {
    let started = Instant::now();
    let (prob, raw) = match load_validated(&args.problem) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let caps = args.caps.caps();
    let report = analyze(&prob.system, &caps);

    println!(
        "problem: {} ({} variables, {} actions)",
        args.problem.display(),
        report.var_count,
        report.action_count
    );
    let metric = |name: &str, v: Option<u64>| match v {
        Some(v) => println!("{name}: {v}"),
        None => println!("{name}: refused (cap exceeded)"),
    };
    metric("diameter", report.diameter);
    metric("recurrence diameter", report.recurrence_diameter);
    metric("traversal diameter", report.traversal_diameter);
    metric("sublist diameter", report.sublist_diameter);
    metric("subset diameter", report.subset_diameter);
    println!("trivial bound (2^n - 1): {}", report.trivial_bound);
    for r in &report.refusals {
        println!("note: {r}");
    }

    if let Some(path) = &args.report {
        let run = RunReport::new(
            "analyze",
            &args.problem,
            &raw,
            serde_json::json!({ "caps": caps }),
            started.elapsed().as_secs_f64(),
            ReportOutcome::Analyze(report),
        );
        if let Err(e) = run.write(path) {
            return fail(EXIT_INTERNAL, e);
        }
    }
    EXIT_OPTIMAL
}

fn cmd_optimize(args: OptimizeArgs) -> u8 {
    let started = Instant::now();
    let (prob, raw) = match load_validated(&args.problem) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let caps = args.caps.caps();

    let config = SolveConfig {
        solver: args.solver.clone(),
        solver_budget: Budget::UNLIMITED,
        time_budget: args.time_budget.map(Duration::from_secs_f64),
        amo: args.amo,
        gcd_scaling: !args.no_gcd_scaling,
        factoring: !args.no_factoring,
        horizon_source: args.horizon_source,
        caps,
        seed: args.seed,
    };
    let config_json = serde_json::json!({
        "solver": config.solver,
        "amo": config.amo,
        "gcd_scaling": config.gcd_scaling,
        "factoring": config.factoring,
        "horizon_source": config.horizon_source,
        "seed": config.seed,
        "time_budget_seconds": args.time_budget,
        "initial_strategy": args.initial_strategy,
        "caps": caps,
    });

    let initial = match &args.initial_plan {
        Some(path) => match load_plan(path, &prob.system) {
            Ok(plan) => {
                if !is_solution(&prob, &plan) {
                    return fail(EXIT_USAGE, "the supplied initial plan does not solve the problem");
                }
                plan
            }
            Err(e) => return fail(EXIT_USAGE, e),
        },
        None => match initial_plan(&prob, args.initial_strategy, &caps) {
            Ok(SearchOutcome::Plan(plan)) => plan,
            Ok(SearchOutcome::Unsolvable) => {
                println!("unsolvable: the goal is unreachable from the initial state");
                if let Some(path) = &args.report {
                    let run = RunReport::new(
                        "optimize",
                        &args.problem,
                        &raw,
                        config_json,
                        started.elapsed().as_secs_f64(),
                        ReportOutcome::Unsolvable,
                    );
                    if let Err(e) = run.write(path) {
                        return fail(EXIT_INTERNAL, e);
                    }
                }
                return EXIT_UNSOLVABLE;
            }
            Err(e) => return fail(EXIT_USAGE, e),
        },
    };

    let log = match optimize(&prob, initial, &config) {
        Ok(log) => log,
        Err(e) => return fail(EXIT_INTERNAL, e),
    };

    println!("initial cost: {}", log.initial_cost);
    for (i, it) in log.iterations.iter().enumerate() {
        let what = match &it.outcome {
            IterationOutcome::Improved { cost, length, .. } => {
                format!("found a plan of cost {cost} (length {length})")
            }
            IterationOutcome::ProvedOptimal => "UNSAT, optimality proven".to_string(),
            IterationOutcome::Inconclusive { reason } => format!("inconclusive: {reason}"),
        };
        println!(
            "iteration {}: bound {} at horizon {} ({} vars, {} clauses): {}",
            i + 1,
            it.cost_bound,
            it.horizon,
            it.cnf_vars,
            it.cnf_clauses,
            what
        );
    }
    println!(
        "best cost: {} ({})",
        log.best_cost,
        if log.optimal_proven {
            "optimal, proven"
        } else {
            "not proven optimal"
        }
    );
    println!("plan:");
    print!("{}", format_plan(&log.best));

    if let Some(path) = &args.plan_out {
        if let Err(e) = std::fs::write(path, format_plan(&log.best)) {
            return fail(EXIT_INTERNAL, e);
        }
    }
    let improved = log.best_cost < log.initial_cost;
    let proven = log.optimal_proven;
    if let Some(path) = &args.report {
        let run = RunReport::new(
            "optimize",
            &args.problem,
            &raw,
            config_json,
            started.elapsed().as_secs_f64(),
            ReportOutcome::Optimize(log),
        );
        if let Err(e) = run.write(path) {
            return fail(EXIT_INTERNAL, e);
        }
    }
    if proven {
        EXIT_OPTIMAL
    } else if improved {
        EXIT_IMPROVED
    } else {
        EXIT_UNCHANGED
    }
}

fn cmd_encode(args: EncodeArgs) -> u8 {
    let started = Instant::now();
    let (prob, raw) = match load_validated(&args.problem) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let ap = match augment_problem(&prob, args.cost_bound) {
        Ok(ap) => ap,
        Err(e) => return fail(EXIT_INTERNAL, e),
    };
    let system = if args.no_factoring {
        ap.augmented.system.clone()
    } else {
        factor_actions(&ap.augmented.system)
    };
    let enc_problem = Problem::new(
        system,
        ap.augmented.costs.clone(),
        ap.augmented.init.clone(),
        ap.augmented.goal.clone(),
    );
    let (cnf, meta) = match encode_bounded(&enc_problem, args.horizon, &EncodeOptions { amo: args.amo })
    {
        Ok(x) => x,
        Err(e) => return fail(EXIT_USAGE, e),
    };

    let meta_path = args
        .meta
        .clone()
        .unwrap_or_else(|| args.out.with_extension("meta.json"));
    if let Err(e) = std::fs::write(&args.out, emit_dimacs(&cnf)) {
        return fail(EXIT_INTERNAL, e);
    }
    let sidecar = metadata_file(&meta, &cnf);
    let sidecar_text = serde_json::to_string_pretty(&sidecar).expect("metadata serializes");
    if let Err(e) = std::fs::write(&meta_path, sidecar_text) {
        return fail(EXIT_INTERNAL, e);
    }
    println!(
        "wrote {} ({} variables, {} clauses) and {}",
        args.out.display(),
        cnf.var_count(),
        cnf.clause_count(),
        meta_path.display()
    );

    if let Some(path) = &args.report {
        let run = RunReport::new(
            "encode",
            &args.problem,
            &raw,
            serde_json::json!({
                "cost_bound": args.cost_bound,
                "horizon": args.horizon,
                "factoring": !args.no_factoring,
                "amo": args.amo,
            }),
            started.elapsed().as_secs_f64(),
            ReportOutcome::Encode {
                variables: cnf.var_count(),
                clauses: cnf.clause_count(),
                dimacs_path: args.out.display().to_string(),
                metadata_path: meta_path.display().to_string(),
            },
        );
        if let Err(e) = run.write(path) {
            return fail(EXIT_INTERNAL, e);
        }
    }
    EXIT_OPTIMAL
}

fn cmd_validate(args: ValidateArgs) -> u8 {
    let started = Instant::now();
    let (prob, _, raw) = match load_problem(&args.problem) {
        Ok(x) => x,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let text = match std::fs::read_to_string(&args.plan) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let plan = match plan_from_names(&prob.system, &parse_plan_names(&text)) {
        Ok(p) => p,
        Err(e) => return fail(EXIT_USAGE, e),
    };

    let valid = is_solution(&prob, &plan);
    let cost = plan_cost(&prob.costs, &plan).ok();
    let mut unmet = Vec::new();
    if !valid {
        let end = execute_sequence(&prob.init, &plan);
        for (v, b) in prob.goal.iter() {
            if end.get(v) != Some(b) {
                unmet.push(if b { v.name().to_string() } else { format!("-{v}") });
            }
        }
    }

    if valid {
        match cost {
            Some(c) => println!("valid plan, cost {c}"),
            None => println!("valid plan, cost unavailable"),
        }
    } else {
        println!("invalid plan; unmet goal literals: {}", unmet.join(", "));
    }

    if let Some(path) = &args.report {
        let run = RunReport::new(
            "validate",
            &args.problem,
            &raw,
            serde_json::json!({ "plan": args.plan.display().to_string() }),
            started.elapsed().as_secs_f64(),
            ReportOutcome::Validate {
                valid,
                cost,
                unmet_goals: unmet.clone(),
            },
        );
        if let Err(e) = run.write(path) {
            return fail(EXIT_INTERNAL, e);
        }
    }
    if valid {
        EXIT_OPTIMAL
    } else {
        EXIT_UNCHANGED
    }
}

fn cmd_compare(args: CompareArgs) -> u8 {
    let (rows, errors) = compare_rows(&args.reports);
    print!("{}", format_compare_table(&rows));
    for e in &errors {
        eprintln!("error: {e}");
    }
    if errors.is_empty() {
        EXIT_OPTIMAL
    } else {
        EXIT_USAGE
    }
}

fn cmd_solve_dimacs(args: SolveDimacsArgs) -> u8 {
    let text = match std::fs::read_to_string(&args.cnf) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let cnf = match parse_dimacs(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_USAGE, e),
    };
    let budget = Budget {
        time: args.time_budget.map(Duration::from_secs_f64),
        conflicts: None,
    };
    match solve_cnf(&cnf, budget) {
        SolveResult::Sat(model) => {
            println!("s SATISFIABLE");
            let mut line = String::from("v");
            for var in 1..=cnf.var_count() {
                let lit = if model.value(var) {
                    format!(" {var}")
                } else {
                    format!(" -{var}")
                };
                line.push_str(&lit);
                if line.len() > 72 {
                    println!("{line}");
                    line = String::from("v");
                }
            }
            println!("{line} 0");
            10
        }
        SolveResult::Unsat => {
            println!("s UNSATISFIABLE");
            20
        }
        SolveResult::Unknown(reason) => {
            println!("s UNKNOWN");
            eprintln!("note: {reason}");
            30
        }
    }
}

fn cmd_gen(args: GenArgs) -> u8 {
    let spec = match &args.spec_json {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_USAGE, e),
            };
            match serde_json::from_str::<GenSpec>(&text) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_USAGE, e),
            }
        }
        None => {
            let cost_mode = match args.cost_mode.as_str() {
                "unit" => CostMode::AllUnit,
                "no-zero" => CostMode::NoZero {
                    min: 1,
                    max: args.max_cost,
                },
                "with-zero" => CostMode::WithZero {
                    zero_prob: args.zero_prob,
                    max: args.max_cost,
                },
                other => {
                    return fail(
                        EXIT_USAGE,
                        format!("unknown cost mode `{other}`; expected unit|no-zero|with-zero"),
                    )
                }
            };
            GenSpec {
                var_count: args.vars,
                action_count: args.actions,
                cost_mode,
                seed: args.seed,
                ..Default::default()
            }
        }
    };

    let prob = if args.unsolvable {
        match gen_unsolvable_problem(&spec) {
            Some(p) => p,
            None => {
                return fail(
                    EXIT_UNSOLVABLE,
                    "every state is reachable for this seed; no unsolvable goal exists",
                )
            }
        }
    } else {
        gen_problem(&spec)
    };
    let file = problem_to_file(&prob);
    let text = serde_json::to_string_pretty(&file).expect("problem files serialize");
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return fail(EXIT_INTERNAL, e);
            }
        }
        None => println!("{text}"),
    }
    EXIT_OPTIMAL
}
