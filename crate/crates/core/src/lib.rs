//! Log-log convex programming.
//!
//! Build expressions over positive variables from a registry of atoms,
//! check them against the disciplined geometric programming rules, lower
//! them to a log-space exponential-sum program, and solve that with a
//! barrier method.
//!
//! ```
//! use llcp::{apply, variable, Atom, Problem, Shape, Status};
//!
//! let x = variable("x", Shape::scalar()).unwrap();
//! let y = variable("y", Shape::scalar()).unwrap();
//! let lhs = apply(Atom::Exp, vec![&y / &x]).unwrap();
//! let rhs = apply(Atom::Log, vec![y.clone()]).unwrap();
//! let problem = Problem::minimize(&x * &y, vec![lhs.le(&rhs).unwrap()]).unwrap();
//! assert!(llcp::is_dgp(&problem));
//!
//! let solution = llcp::solve_problem(&problem, &Default::default()).unwrap();
//! assert_eq!(solution.status, Status::Optimal);
//! assert!((solution.optimal_value - 48.8103).abs() < 1e-3);
//! ```

pub mod atoms;
pub mod canon;
pub mod cli;
pub mod dgp;
pub mod document;
pub mod error;
pub mod expr;
pub mod probe;
pub mod problem;
pub mod solver;

pub use atoms::{atom_info, eval_atom, list_atoms, Atom, AtomDescriptor, Curvature, Monotonicity};
pub use canon::{lower, retrieve, ExpSumProgram, RetrievalMap};
pub use dgp::{curvature, explain, is_dgp, DgpReport};
pub use document::{parse_problem_file, serialize_problem, ProblemDocument};
pub use error::{DomainError, Error, ParseError, ParseErrorKind, Result};
pub use expr::{apply, apply_named, assignment, constant, scalar_constant, variable, Assignment, Expression, Shape};
pub use probe::{numeric_curvature_probe, ProbeOutcome};
pub use problem::{Constraint, ConstraintId, ConstraintKind, Problem, Sense, Solution, SolverStats, Status};
pub use solver::{solve, SolverResult, SolverSettings};

/// Lower, solve, and retrieve in one call.
pub fn solve_problem(problem: &Problem, settings: &SolverSettings) -> Result<Solution> {
    let (program, map) = lower(problem)?;
    let result = solve(&program, settings)?;
    retrieve(&map, &program, &result)
}
