//! Translating canonical solutions back to the user problem.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{Coordinate, ExpSumProgram};
use crate::error::{Error, Result};
use crate::expr::Shape;
use crate::problem::{ConstraintId, ConstraintKind, Sense, Solution, SolverStats, Status};
use crate::solver::SolverResult;

/// Canonical row carrying the dual of one user constraint entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrincipalRow {
    Inequality(usize),
    Equality(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSlot {
    pub name: String,
    #[serde(skip)]
    pub shape: Shape,
    /// First coordinate; entries follow in row-major order.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintSlot {
    pub id: ConstraintId,
    pub kind: ConstraintKind,
    #[serde(skip)]
    pub shape: Shape,
    /// One principal row per entry, row-major.
    pub rows: Vec<PrincipalRow>,
}

/// Everything needed to map a canonical solution back.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalMap {
    pub sense: Sense,
    pub variables: Vec<VariableSlot>,
    pub constraints: Vec<ConstraintSlot>,
    /// Constant part of the canonical objective.
    pub objective_offset: f64,
    pub num_coords: usize,
    pub num_inequalities: usize,
    pub num_equalities: usize,
}

impl RetrievalMap {
    fn check(&self, program: &ExpSumProgram, result: &SolverResult) -> Result<()> {
        let dims = [
            ("coordinates", self.num_coords, program.num_coords(), result.u.len()),
            (
                "inequalities",
                self.num_inequalities,
                program.inequalities.len(),
                result.lambda.len(),
            ),
            ("equalities", self.num_equalities, program.equalities.len(), result.nu.len()),
        ];
        for (what, a, b, c) in dims {
            if a != b || b != c {
                return Err(Error::Internal(format!(
                    "retrieval map, program, and result disagree on {what}: {a}, {b}, {c}"
                )));
            }
        }
        for v in &self.variables {
            if v.start + v.shape.numel() > self.num_coords {
                return Err(Error::Internal(format!("variable `{}` maps outside the program", v.name)));
            }
        }
        for c in &self.constraints {
            for r in &c.rows {
                let ok = match *r {
                    PrincipalRow::Inequality(i) => i < self.num_inequalities && program.inequalities[i].principal,
                    PrincipalRow::Equality(i) => i < self.num_equalities && program.equalities[i].principal,
                };
                if !ok {
                    return Err(Error::Internal(format!("constraint {} has an invalid principal row", c.id)));
                }
            }
        }
        Ok(())
    }
}

/// Exponentiate the canonical point and attach principal duals.
pub fn retrieve(map: &RetrievalMap, program: &ExpSumProgram, result: &SolverResult) -> Result<Solution> {
    map.check(program, result)?;
    let has_point = matches!(result.status, Status::Optimal | Status::MaxIterations);

    let mut variable_values = BTreeMap::new();
    let mut dual_values = BTreeMap::new();
    if has_point {
        for v in &map.variables {
            let m = DMatrix::from_fn(v.shape.rows, v.shape.cols, |i, j| {
                result.u[v.start + i * v.shape.cols + j].exp()
            });
            variable_values.insert(v.name.clone(), m);
        }
        for c in &map.constraints {
            let m = DMatrix::from_fn(c.shape.rows, c.shape.cols, |i, j| match c.rows[i * c.shape.cols + j] {
                PrincipalRow::Inequality(k) => result.lambda[k],
                PrincipalRow::Equality(k) => result.nu[k],
            });
            dual_values.insert(c.id, m);
        }
    }

    let optimal_value = match (result.status, map.sense) {
        (Status::Optimal | Status::MaxIterations, Sense::Minimize) => result.value.exp(),
        (Status::Optimal | Status::MaxIterations, Sense::Maximize) => (-result.value).exp(),
        (Status::Unbounded, Sense::Minimize) => 0.0,
        (Status::Unbounded, Sense::Maximize) => f64::INFINITY,
        (Status::Infeasible, _) => f64::NAN,
    };

    let auxiliary = if has_point {
        program
            .coords
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match c {
                Coordinate::Auxiliary { tag, owner } => Some((format!("{owner}: {tag}"), result.u[i].exp())),
                Coordinate::Variable { .. } => None,
            })
            .collect()
    } else {
        Vec::new()
    };

    let stats = SolverStats {
        phase1_newton_steps: result.phase1_newton_steps,
        newton_steps: result.newton_steps,
        centering_steps: result.history.len(),
        surrogate_gap: result.surrogate_gap(),
        stationarity: result.residual.stationarity,
        primal_infeasibility: result.residual.primal_feasibility.max(result.residual.equality),
        complementarity: result.residual.complementarity,
        canonical_value: result.value,
        auxiliary,
        message: result.message.clone(),
    };

    Ok(Solution {
        status: result.status,
        optimal_value,
        variable_values,
        dual_values,
        stats,
    })
}
