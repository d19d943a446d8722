//! Values and derivatives of exponential-sum constraints.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::canon::{AffineForm, ExpSumConstraint, ExpSumProgram};

/// Exponents above this are treated as overflow: the row value is reported
/// as `+inf` so that line searches reject the point.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

pub(crate) fn form_value(f: &AffineForm, u: &[f64]) -> f64 {
    f.coeffs.iter().map(|(i, c)| c * u[*i]).sum::<f64>() + f.constant
}

fn add_form(g: &mut DVector<f64>, f: &AffineForm, w: f64) {
    for (i, c) in &f.coeffs {
        g[*i] += w * c;
    }
}

fn add_outer(h: &mut DMatrix<f64>, f: &AffineForm, w: f64) {
    for (i, ci) in &f.coeffs {
        for (j, cj) in &f.coeffs {
            h[(*i, *j)] += w * ci * cj;
        }
    }
}

/// Value of `Σ exp(a_kᵀu + b_k) + fᵀu + g`, or `+inf` on overflow.
pub fn constraint_value(c: &ExpSumConstraint, u: &[f64]) -> f64 {
    let mut v = form_value(&c.tail, u);
    for t in &c.terms {
        let z = form_value(t, u);
        if z > OVERFLOW_EXPONENT {
            return f64::INFINITY;
        }
        v += z.exp();
    }
    v
}

/// Value, gradient `Σ e_k a_k + f`, and Hessian `Σ e_k a_k a_kᵀ` of one
/// constraint at `u`.
pub fn constraint_value_grad_hess(c: &ExpSumConstraint, u: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = u.len();
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    let value = accumulate(c, u.as_slice(), &mut g, &mut h, 1.0, 1.0);
    (value, g, h)
}

/// Add `wg·∇h` to `g` and `wh·∇²h` to `hess`, returning `h(u)`.
pub(crate) fn accumulate(
    c: &ExpSumConstraint,
    u: &[f64],
    g: &mut DVector<f64>,
    hess: &mut DMatrix<f64>,
    wg: f64,
    wh: f64,
) -> f64 {
    let mut v = form_value(&c.tail, u);
    add_form(g, &c.tail, wg);
    let mut overflow = false;
    for t in &c.terms {
        let z = form_value(t, u);
        overflow |= z > OVERFLOW_EXPONENT;
        let e = z.exp();
        v += e;
        add_form(g, t, wg * e);
        if wh != 0.0 {
            add_outer(hess, t, wh * e);
        }
    }
    if overflow {
        f64::INFINITY
    } else {
        v
    }
}

/// Gradient of one constraint at `u`.
pub(crate) fn constraint_grad(c: &ExpSumConstraint, u: &[f64]) -> DVector<f64> {
    let mut g = DVector::zeros(u.len());
    add_form(&mut g, &c.tail, 1.0);
    for t in &c.terms {
        add_form(&mut g, t, form_value(t, u).exp());
    }
    g
}

/// Infinity norms of the KKT conditions for a canonical program.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct KktResidual {
    /// `‖c + Σ λ_i ∇h_i + Aᵀν‖∞`.
    pub stationarity: f64,
    /// `max(0, max_i h_i)`.
    pub primal_feasibility: f64,
    /// `max_i |λ_i h_i|`.
    pub complementarity: f64,
    /// `‖A u − d‖∞`.
    pub equality: f64,
}

/// KKT residuals at `(u, λ, ν)`. Panics if the dimensions do not match the
/// program.
pub fn kkt_residual(program: &ExpSumProgram, u: &DVector<f64>, lambda: &DVector<f64>, nu: &DVector<f64>) -> KktResidual {
    assert_eq!(u.len(), program.num_coords(), "primal dimension mismatch");
    assert_eq!(lambda.len(), program.inequalities.len(), "inequality dual dimension mismatch");
    assert_eq!(nu.len(), program.equalities.len(), "equality dual dimension mismatch");
    let us = u.as_slice();
    let mut grad = DVector::zeros(u.len());
    add_form(&mut grad, &program.objective, 1.0);
    let mut res = KktResidual::default();
    for (h, l) in program.inequalities.iter().zip(lambda.iter()) {
        let v = constraint_value(h, us);
        res.primal_feasibility = res.primal_feasibility.max(v);
        res.complementarity = res.complementarity.max((l * v).abs());
        if *l != 0.0 {
            grad += constraint_grad(h, us) * *l;
        }
    }
    for (e, n) in program.equalities.iter().zip(nu.iter()) {
        add_form(&mut grad, &e.form, *n);
        res.equality = res.equality.max(form_value(&e.form, us).abs());
    }
    res.stationarity = grad.amax();
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{Origin, Owner};

    fn row(terms: Vec<AffineForm>, tail: AffineForm) -> ExpSumConstraint {
        ExpSumConstraint {
            terms,
            tail,
            origin: Origin {
                owner: Owner::Objective,
                source: "test".into(),
            },
            principal: false,
        }
    }

    #[test]
    fn single_term_values() {
        let c = row(vec![AffineForm::coord(0)], AffineForm::constant(-1.0));
        let (v, g, h) = constraint_value_grad_hess(&c, &DVector::from_vec(vec![0.0]));
        assert_eq!((v, g[0], h[(0, 0)]), (0.0, 1.0, 1.0));
        let (v, _, _) = constraint_value_grad_hess(&c, &DVector::from_vec(vec![1.0]));
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn overflow_is_reported_as_infinite() {
        let c = row(vec![AffineForm::coord(0).scale(2.0)], AffineForm::constant(0.0));
        assert_eq!(constraint_value(&c, &[400.0]), f64::INFINITY);
        assert!(constraint_value(&c, &[100.0]).is_finite());
    }
}
