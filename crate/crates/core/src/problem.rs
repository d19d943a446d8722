//! Constraints, problems, and solutions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expression, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Minimize => "minimize",
            Sense::Maximize => "maximize",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    LessEq,
    Eq,
}

/// Process-unique constraint identity, used to key dual values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ConstraintId(pub u64);

static NEXT_CONSTRAINT_ID: AtomicU64 = AtomicU64::new(0);

impl ConstraintId {
    fn fresh() -> ConstraintId {
        ConstraintId(NEXT_CONSTRAINT_ID.fetch_add(1, Ordering::Relaxed))
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An elementwise relation `lhs <= rhs` or `lhs == rhs`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub lhs: Expression,
    pub rhs: Expression,
    pub id: ConstraintId,
}

impl Constraint {
    fn new(kind: ConstraintKind, lhs: Expression, rhs: Expression) -> Result<Constraint> {
        if lhs.shape() != rhs.shape() {
            return Err(Error::Construction(format!(
                "constraint sides have shapes {} and {}",
                lhs.shape(),
                rhs.shape()
            )));
        }
        Ok(Constraint {
            kind,
            lhs,
            rhs,
            id: ConstraintId::fresh(),
        })
    }

    pub fn less_eq(lhs: Expression, rhs: Expression) -> Result<Constraint> {
        Constraint::new(ConstraintKind::LessEq, lhs, rhs)
    }

    pub fn equal(lhs: Expression, rhs: Expression) -> Result<Constraint> {
        Constraint::new(ConstraintKind::Eq, lhs, rhs)
    }

    pub fn shape(&self) -> Shape {
        self.lhs.shape()
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.kind {
            ConstraintKind::LessEq => "<=",
            ConstraintKind::Eq => "==",
        };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

/// An optimization problem over positive variables.
#[derive(Debug, Clone)]
pub struct Problem {
    pub sense: Sense,
    pub objective: Expression,
    pub constraints: Vec<Constraint>,
    variables: Vec<(String, Shape)>,
}

impl Problem {
    /// Assemble a problem. The objective must be scalar, and a variable
    /// name may not be used with two different shapes.
    pub fn new(sense: Sense, objective: Expression, constraints: Vec<Constraint>) -> Result<Problem> {
        Problem::with_declared(sense, objective, constraints, &[])
    }

    /// Like [`Problem::new`], but with variables declared up front (in that
    /// order) even if they appear nowhere in the trees.
    pub fn with_declared(
        sense: Sense,
        objective: Expression,
        constraints: Vec<Constraint>,
        declared: &[(String, Shape)],
    ) -> Result<Problem> {
        if !objective.shape().is_scalar() {
            return Err(Error::Construction(format!(
                "objective must be scalar; found shape {}",
                objective.shape()
            )));
        }
        let mut seen: Vec<(String, Shape)> = declared.to_vec();
        objective.collect_variables(&mut seen);
        for c in &constraints {
            c.lhs.collect_variables(&mut seen);
            c.rhs.collect_variables(&mut seen);
        }
        for (i, (name, shape)) in seen.iter().enumerate() {
            if let Some((_, other)) = seen[..i].iter().find(|(n, _)| n == name) {
                return Err(Error::Construction(format!(
                    "variable `{name}` is used with shapes {other} and {shape}"
                )));
            }
        }
        Ok(Problem {
            sense,
            objective,
            constraints,
            variables: seen,
        })
    }

    pub fn minimize(objective: Expression, constraints: Vec<Constraint>) -> Result<Problem> {
        Problem::new(Sense::Minimize, objective, constraints)
    }

    pub fn maximize(objective: Expression, constraints: Vec<Constraint>) -> Result<Problem> {
        Problem::new(Sense::Maximize, objective, constraints)
    }

    /// Variables in declaration / first-appearance order.
    pub fn variables(&self) -> &[(String, Shape)] {
        &self.variables
    }

    pub fn constraint(&self, id: ConstraintId) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::MaxIterations => "max_iterations",
        })
    }
}

/// Iteration counts, residuals, and auxiliary diagnostics.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SolverStats {
    pub phase1_newton_steps: usize,
    pub newton_steps: usize,
    pub centering_steps: usize,
    pub surrogate_gap: f64,
    pub stationarity: f64,
    pub primal_infeasibility: f64,
    pub complementarity: f64,
    /// Canonical objective value (log scale).
    pub canonical_value: f64,
    /// Exponentiated values of auxiliary coordinates, by origin tag. These
    /// are diagnostics only (e.g. the Perron eigenvector of a
    /// `pf_eigenvalue` graph) and carry no optimality guarantee.
    pub auxiliary: Vec<(String, f64)>,
    pub message: Option<String>,
}

/// Result of solving a problem, expressed in the original variables.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// `0` for unbounded minimization, `+inf` for unbounded maximization,
    /// NaN when no value is available.
    pub optimal_value: f64,
    pub variable_values: BTreeMap<String, DMatrix<f64>>,
    /// Dual values of each user constraint, entrywise. Inequality duals are
    /// nonnegative; equality duals carry a sign.
    pub dual_values: BTreeMap<ConstraintId, DMatrix<f64>>,
    pub stats: SolverStats,
}

impl Solution {
    pub fn value(&self, name: &str) -> Option<&DMatrix<f64>> {
        self.variable_values.get(name)
    }

    pub fn dual(&self, id: ConstraintId) -> Option<&DMatrix<f64>> {
        self.dual_values.get(&id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{scalar_constant, variable};

    #[test]
    fn objective_must_be_scalar() {
        let x = variable("x", Shape::new(2, 1).unwrap()).unwrap();
        assert!(Problem::minimize(x, vec![]).is_err());
    }

    #[test]
    fn conflicting_variable_shapes_are_rejected() {
        let a = variable("x", Shape::scalar()).unwrap();
        let b = variable("x", Shape::new(2, 1).unwrap()).unwrap();
        let one = scalar_constant(1.0).unwrap();
        let c = b.le(&constant_col(2)).unwrap();
        assert!(Problem::minimize(&a * &one, vec![c]).is_err());
    }

    fn constant_col(n: usize) -> Expression {
        crate::expr::constant(DMatrix::from_element(n, 1, 1.0)).unwrap()
    }

    #[test]
    fn constraint_ids_are_unique() {
        let x = variable("x", Shape::scalar()).unwrap();
        let one = scalar_constant(1.0).unwrap();
        let a = x.le(&one).unwrap();
        let b = x.le(&one).unwrap();
        assert_ne!(a.id, b.id);
        assert!(x.le(&constant_col(2)).is_err());
    }
}
