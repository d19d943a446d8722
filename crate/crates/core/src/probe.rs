//! Numeric curvature probing for scalar functions of one positive variable.
//!
//! Two independent checks are combined: the second-order condition
//! `f''(x) + f'(x)/x >= f'(x)^2 / f(x)` with finite-difference derivatives,
//! and the geometric-mean Jensen inequality
//! `f(x^θ y^(1-θ)) <= f(x)^θ f(y)^(1-θ)` on seeded random pairs. This is a
//! test oracle for the analyzer; it never certifies anything.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::atoms::Curvature;
use crate::error::{DomainError, Error, Result};
use crate::expr::{Assignment, Expression};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    ConsistentConvex,
    ConsistentConcave,
    ConsistentAffine,
    /// Evidence of both positive and negative log-log curvature; `point` is
    /// where the contradicting sign was observed.
    Violation { point: f64 },
}

impl ProbeOutcome {
    /// Whether the numeric evidence is compatible with a declared curvature.
    pub fn agrees_with(self, declared: Curvature) -> bool {
        match self {
            ProbeOutcome::Violation { .. } => declared == Curvature::Unknown,
            ProbeOutcome::ConsistentAffine => true,
            ProbeOutcome::ConsistentConvex => declared.is_convex() || declared == Curvature::Unknown,
            ProbeOutcome::ConsistentConcave => declared.is_concave() || declared == Curvature::Unknown,
        }
    }
}

/// Relative tolerance for the second-order condition.
pub const SECOND_ORDER_RTOL: f64 = 1e-5;
/// Absolute tolerance for the Jensen check on the log scale.
pub const JENSEN_LOG_TOL: f64 = 1e-9;

const PROBE_SEED: u64 = 0x6c6c_6370;

/// One scalar variable evaluator built from an expression.
struct ScalarFn<'a> {
    expr: &'a Expression,
    name: String,
}

impl ScalarFn<'_> {
    fn eval(&self, x: f64) -> Result<f64> {
        let mut a = Assignment::new();
        a.insert(self.name.clone(), DMatrix::from_element(1, 1, x));
        Ok(self.expr.evaluate(&a)?[(0, 0)])
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Sign {
    Pos,
    Neg,
    Zero,
}

/// Second-order residual `f'' + f'/x - f'^2/f` and its scale, from
/// five-point finite differences with step `h`.
pub fn second_order_residual(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<(f64, f64)> {
    let (fm2, fm1, f0, fp1, fp2) = (f(x - 2.0 * h)?, f(x - h)?, f(x)?, f(x + h)?, f(x + 2.0 * h)?);
    let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
    let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
    let lhs = d2 + d1 / x;
    let rhs = d1 * d1 / f0;
    let scale = d2.abs() + (d1 / x).abs() + rhs.abs() + f0 / (x * x) * 1e-6;
    Ok((lhs - rhs, scale))
}

fn classify(value: f64, tol: f64) -> Sign {
    if value > tol {
        Sign::Pos
    } else if value < -tol {
        Sign::Neg
    } else {
        Sign::Zero
    }
}

/// Probe the log-log curvature of a scalar expression in one scalar
/// variable over the open interval `(lo, hi)`.
pub fn numeric_curvature_probe(expr: &Expression, interval: (f64, f64), samples: usize) -> Result<ProbeOutcome> {
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(DomainError::new(format!("probe interval ({lo}, {hi}) must be a positive, nonempty range")).into());
    }
    if !expr.shape().is_scalar() {
        return Err(Error::Construction("probe requires a scalar expression".into()));
    }
    let vars = expr.variables();
    let name = match vars.as_slice() {
        [(n, s)] if s.is_scalar() => n.clone(),
        [] => return Ok(ProbeOutcome::ConsistentAffine),
        _ => {
            return Err(Error::Construction(
                "probe requires exactly one scalar variable".into(),
            ))
        }
    };
    let f = ScalarFn { expr, name };
    let samples = samples.max(2);
    let (llo, lhi) = (lo.ln(), hi.ln());

    let mut first: Option<Sign> = None;
    let mut record = |sign: Sign, point: f64| -> Option<ProbeOutcome> {
        if sign == Sign::Zero {
            return None;
        }
        match first {
            None => {
                first = Some(sign);
                None
            }
            Some(s) if s != sign => Some(ProbeOutcome::Violation { point }),
            Some(_) => None,
        }
    };

    for k in 0..samples {
        let x = (llo + (k as f64 + 0.5) / samples as f64 * (lhi - llo)).exp();
        let h = (2e-3 * x).min((x - lo) / 4.0).min((hi - x) / 4.0);
        let (res, scale) = second_order_residual(|t| f.eval(t), x, h)?;
        if let Some(v) = record(classify(res, SECOND_ORDER_RTOL * scale), x) {
            return Ok(v);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    for _ in 0..samples {
        let (ux, uy) = (rng.random_range(llo..lhi), rng.random_range(llo..lhi));
        let theta: f64 = rng.random_range(0.0..=1.0);
        let (fx, fy) = (f.eval(ux.exp())?, f.eval(uy.exp())?);
        let mid = (theta * ux + (1.0 - theta) * uy).exp();
        let gap = theta * fx.ln() + (1.0 - theta) * fy.ln() - f.eval(mid)?.ln();
        if let Some(v) = record(classify(gap, JENSEN_LOG_TOL), mid) {
            return Ok(v);
        }
    }

    Ok(match first {
        None => ProbeOutcome::ConsistentAffine,
        Some(Sign::Pos) => ProbeOutcome::ConsistentConvex,
        Some(_) => ProbeOutcome::ConsistentConcave,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::Atom;
    use crate::expr::{apply, variable, Shape};

    fn x() -> Expression {
        variable("x", Shape::scalar()).unwrap()
    }

    #[test]
    fn classifies_reference_functions() {
        let exp = apply(Atom::Exp, vec![x()]).unwrap();
        assert_eq!(numeric_curvature_probe(&exp, (0.1, 5.0), 200).unwrap(), ProbeOutcome::ConsistentConvex);
        assert_eq!(
            numeric_curvature_probe(&x().pow(2.0), (0.1, 10.0), 200).unwrap(),
            ProbeOutcome::ConsistentAffine
        );
        let ent = apply(Atom::Entropy, vec![x()]).unwrap();
        assert_eq!(
            numeric_curvature_probe(&ent, (0.01, 0.99), 200).unwrap(),
            ProbeOutcome::ConsistentConcave
        );
    }

    #[test]
    fn detects_mixed_curvature() {
        // log of exp(x)^2 (1 - x) is 2x + log(1 - x) in x = e^u: convex below
        // x ~ 0.29 and concave above.
        let e = &apply(Atom::Exp, vec![x()]).unwrap().pow(2.0) * &apply(Atom::OneMinus, vec![x()]).unwrap();
        let outcome = numeric_curvature_probe(&e, (0.01, 0.99), 200).unwrap();
        assert!(matches!(outcome, ProbeOutcome::Violation { .. }), "{outcome:?}");
    }

    #[test]
    fn rejects_bad_intervals() {
        let log = apply(Atom::Log, vec![x()]).unwrap();
        assert!(numeric_curvature_probe(&log, (0.5, 2.0), 50).is_err());
        assert!(numeric_curvature_probe(&log, (2.0, 1.5), 50).is_err());
    }
}
