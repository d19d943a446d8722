//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::atoms::{list_atoms, MonotonicitySpec};
use crate::canon::{lower, retrieve};
use crate::dgp::explain;
use crate::document::parse_problem_file;
use crate::error::Error;
use crate::problem::{Problem, Solution, Status};
use crate::solver::{solve, SolverSettings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_DGP: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_UNBOUNDED: i32 = 4;
pub const EXIT_MAX_ITERATIONS: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "llcp", version, about = "Disciplined geometric programming: check, canonicalize, and solve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Verify that a problem file follows the DGP rules.
    Check {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the log-space standard form of a problem file.
    Canonicalize {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Solve a problem file.
    Solve(SolveArgs),
    /// List the registered atoms.
    Atoms {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub path: PathBuf,
    #[arg(long)]
    pub json: bool,
    /// Duality-gap and feasibility tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Maximum number of outer (centering) iterations.
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Barrier weight multiplier.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Print one line per centering step to standard error.
    #[arg(long)]
    pub verbose: bool,
}

/// Run a parsed command, writing to the given streams. Returns the exit
/// code.
pub fn run(cli: Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let (code, stdout, stderr) = match cli.command {
        Command::Check { path, json } => cmd_check(&path, json),
        Command::Canonicalize { path, json } => cmd_canonicalize(&path, json),
        Command::Solve(args) => cmd_solve(&args),
        Command::Atoms { json } => (EXIT_OK, cmd_atoms(json), String::new()),
    };
    let _ = out.write_all(stdout.as_bytes());
    let _ = err.write_all(stderr.as_bytes());
    code
}

type Outcome = (i32, String, String);

fn input_error(msg: impl std::fmt::Display) -> Outcome {
    (EXIT_INPUT, String::new(), format!("error: {msg}\n"))
}

fn load(path: &Path) -> Result<Problem, Outcome> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(format_args!("{}: {e}", path.display())))?;
    parse_problem_file(&text).map_err(|e| input_error(format_args!("{}: {e}", path.display())))
}

fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn cmd_check(path: &Path, json: bool) -> Outcome {
    let problem = match load(path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let report = explain(&problem);
    let text = if json { to_json(&report) } else { report.render() };
    (if report.is_dgp { EXIT_OK } else { EXIT_NOT_DGP }, text, String::new())
}

fn lowering_failure(e: Error, json: bool) -> Outcome {
    match e {
        Error::NotDgp(report) => {
            let text = if json { to_json(&report) } else { report.render() };
            (EXIT_NOT_DGP, text, format!("error: {}\n", report.summary()))
        }
        other => input_error(other),
    }
}

pub fn cmd_canonicalize(path: &Path, json: bool) -> Outcome {
    let problem = match load(path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    match lower(&problem) {
        Ok((program, map)) => {
            let text = if json {
                to_json(&json!({ "program": program, "retrieval": map }))
            } else {
                program.dump()
            };
            (EXIT_OK, text, String::new())
        }
        Err(e) => lowering_failure(e, json),
    }
}

pub fn cmd_solve(args: &SolveArgs) -> Outcome {
    let problem = match load(&args.path) {
        Ok(p) => p,
        Err(o) => return o,
    };
    let mut settings = SolverSettings {
        verbose: args.verbose,
        ..SolverSettings::default()
    };
    if let Some(t) = args.tol {
        settings.gap_tol = t;
        settings.feas_tol = t;
    }
    if let Some(m) = args.max_iters {
        settings.max_outer = m;
    }
    if let Some(mu) = args.mu {
        settings.mu = mu;
    }
    let (program, map) = match lower(&problem) {
        Ok(x) => x,
        Err(e) => return lowering_failure(e, args.json),
    };
    let result = match solve(&program, &settings) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    let solution = match retrieve(&map, &program, &result) {
        Ok(s) => s,
        Err(e) => return (EXIT_MAX_ITERATIONS, String::new(), format!("error: {e}\n")),
    };
    let code = match solution.status {
        Status::Optimal => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::Unbounded => EXIT_UNBOUNDED,
        Status::MaxIterations => EXIT_MAX_ITERATIONS,
    };
    let text = if args.json {
        to_json(&solution_json(&problem, &solution))
    } else {
        solution_text(&problem, &solution)
    };
    (code, text, String::new())
}

/// `%.12g`-style formatting.
pub fn format_sig(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        let s = format!("{v:.11e}");
        let (mantissa, e) = s.split_once('e').unwrap();
        format!("{}e{e}", trim(mantissa.to_string()))
    }
}

fn matrix_text(m: &DMatrix<f64>) -> String {
    if m.nrows() == 1 && m.ncols() == 1 {
        return format!(" {}", format_sig(m[(0, 0)]));
    }
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_sig(m[(i, j)])).collect();
        let _ = write!(s, "\n  [{}]", row.join(", "));
    }
    s
}

fn solution_text(problem: &Problem, s: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "status: {}", s.status);
    let _ = writeln!(out, "optimal value: {}", format_sig(s.optimal_value));
    for (name, _) in problem.variables() {
        if let Some(v) = s.value(name) {
            let _ = writeln!(out, "{name} ={}", matrix_text(v));
        }
    }
    for (k, c) in problem.constraints.iter().enumerate() {
        if let Some(d) = s.dual(c.id) {
            let _ = writeln!(out, "dual of constraint {k} ={}", matrix_text(d));
        }
    }
    if let Some(msg) = &s.stats.message {
        let _ = writeln!(out, "note: {msg}");
    }
    out
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn matrix_value(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

/// Machine-readable solution record. Non-finite numbers become `null`.
pub fn solution_json(problem: &Problem, s: &Solution) -> Value {
    let variables: serde_json::Map<String, Value> = problem
        .variables()
        .iter()
        .filter_map(|(name, _)| s.value(name).map(|v| (name.clone(), matrix_value(v))))
        .collect();
    let duals: Vec<Value> = problem
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(k, c)| s.dual(c.id).map(|d| json!({ "constraint": k, "values": matrix_value(d) })))
        .collect();
    let st = &s.stats;
    json!({
        "status": s.status,
        "optimal_value": num(s.optimal_value),
        "variables": variables,
        "duals": duals,
        "stats": {
            "phase1_newton_steps": st.phase1_newton_steps,
            "newton_steps": st.newton_steps,
            "centering_steps": st.centering_steps,
            "surrogate_gap": num(st.surrogate_gap),
            "stationarity": num(st.stationarity),
            "primal_infeasibility": num(st.primal_infeasibility),
            "complementarity": num(st.complementarity),
            "canonical_value": num(st.canonical_value),
            "auxiliary": st.auxiliary.iter().map(|(k, v)| json!([k, num(*v)])).collect::<Vec<_>>(),
            "message": st.message,
        },
    })
}

fn monotonicity_text(m: MonotonicitySpec) -> String {
    match m {
        MonotonicitySpec::All(m) => m.to_string(),
        MonotonicitySpec::PerArgument(ms) => ms.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "),
        MonotonicitySpec::SignOfExponent => "nondecreasing for a >= 0, nonincreasing for a < 0".into(),
    }
}

pub fn cmd_atoms(json: bool) -> String {
    if json {
        return to_json(&list_atoms());
    }
    let mut out = String::new();
    for d in list_atoms() {
        let _ = writeln!(out, "{}", d.name);
        let _ = writeln!(out, "  signature:    {}", d.signature);
        let _ = writeln!(out, "  curvature:    {}", d.curvature.describe());
        let _ = writeln!(out, "  monotonicity: {}", monotonicity_text(d.monotonicity));
        if !d.parameters.is_empty() {
            let _ = writeln!(out, "  parameters:   {}", d.parameters.join(", "));
        }
        let _ = writeln!(out, "  domain:       {}", d.domain);
    }
    out
}

/// Initialize logging from `LLCP_LOG`.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter("LLCP_LOG"))
        .format_timestamp(None)
        .try_init();
}

/// Entry point for the binary.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let code = run(cli, &mut stdout.lock(), &mut stderr.lock());
    let _ = std::io::stdout().flush();
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(48.81026898447343), "48.8102689845");
        assert_eq!(format_sig(11.780089932635645), "11.7800899326");
        assert_eq!(format_sig(1.0), "1");
        assert_eq!(format_sig(1e-20), "1e-20");
        assert_eq!(format_sig(0.000123456789012345), "0.000123456789012");
        assert_eq!(format_sig(f64::INFINITY), "inf");
    }
}
