//! Primal log-barrier interior-point method for [`ExpSumProgram`]s.

mod barrier;
mod kernel;

use nalgebra::DVector;
use serde::Serialize;

use crate::canon::ExpSumProgram;
use crate::error::{Error, Result};
use crate::problem::Status;

pub use barrier::{phase1, Phase1Outcome};
pub use kernel::{constraint_value, constraint_value_grad_hess, kkt_residual, KktResidual, OVERFLOW_EXPONENT};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Barrier weight multiplier per outer iteration.
    pub mu: f64,
    pub tau0: f64,
    pub gap_tol: f64,
    pub feas_tol: f64,
    /// Armijo fraction.
    pub alpha: f64,
    /// Backtracking factor.
    pub beta: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Canonical objective below which the problem is declared unbounded.
    pub unbounded_threshold: f64,
    pub regularization: f64,
    /// Print one line per centering step to standard error.
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            mu: 10.0,
            tau0: 1.0,
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            alpha: 0.25,
            beta: 0.5,
            max_newton: 50,
            max_outer: 100,
            unbounded_threshold: -1e3,
            regularization: 1e-10,
            verbose: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Settings(m.to_string()));
        if !(self.mu > 1.0 && self.mu.is_finite()) {
            return bad("mu must be a finite number > 1");
        }
        if !(self.tau0 > 0.0 && self.tau0.is_finite()) {
            return bad("tau0 must be positive");
        }
        if !(self.gap_tol > 0.0 && self.feas_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad("alpha must lie in (0, 0.5)");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if self.max_newton == 0 || self.max_outer == 0 {
            return bad("iteration limits must be positive");
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return bad("regularization must be nonnegative");
        }
        if self.unbounded_threshold.is_nan() {
            return bad("unbounded threshold must be a number");
        }
        Ok(())
    }
}

/// Summary of one centering step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenteringRecord {
    pub tau: f64,
    pub newton_steps: usize,
    /// Canonical objective at the end of centering.
    pub objective: f64,
    /// Surrogate duality gap `m / τ`.
    pub gap: f64,
    pub decrement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub status: Status,
    pub u: DVector<f64>,
    /// Inequality duals, one per canonical inequality.
    pub lambda: DVector<f64>,
    /// Equality duals, one per canonical equality row.
    pub nu: DVector<f64>,
    /// Canonical objective value `cᵀu + c₀`.
    pub value: f64,
    pub phase1_newton_steps: usize,
    pub newton_steps: usize,
    pub history: Vec<CenteringRecord>,
    pub residual: KktResidual,
    pub message: Option<String>,
}

impl SolverResult {
    pub fn surrogate_gap(&self) -> f64 {
        self.history.last().map_or(0.0, |r| r.gap)
    }
}

/// Solve a canonical program. Only invalid settings produce an error;
/// numerical trouble is reported through the status.
pub fn solve(program: &ExpSumProgram, settings: &SolverSettings) -> Result<SolverResult> {
    settings.validate()?;
    Ok(barrier::solve(program, settings))
}
