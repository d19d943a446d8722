use log::{debug, info};
use nalgebra::{DMatrix, DVector};

use super::kernel::{accumulate, constraint_grad, constraint_value, form_value, kkt_residual};
use super::{CenteringRecord, SolverResult, SolverSettings};
use crate::canon::{AffineForm, ExpSumConstraint, ExpSumProgram};
use crate::error::Result;
use crate::problem::Status;

/// Centering stops once half the squared Newton decrement drops below this.
const NEWTON_TOL: f64 = 1e-14;
/// Below this decrement a full Newton step is taken without Armijo.
const FULL_STEP_DECREMENT: f64 = 1e-8;
const MIN_STEP: f64 = 1e-14;
/// Largest Newton direction, in log space, handed to the line search.
const MAX_DIRECTION: f64 = 20.0;
const RANK_TOL: f64 = 1e-10;
/// Residual of the reduced equality system treated as satisfied.
const EQ_TOL: f64 = 1e-11;
/// A full Newton step that lowers the barrier objective by less than this
/// (relative) ends centering: some auxiliaries approach their infimum only
/// asymptotically, where the decrement never shrinks.
const STALL_DECREASE: f64 = 1e-13;
/// Phase I keeps going until every row has at least this much slack, so
/// centering never starts on the boundary.
const STRICT_MARGIN: f64 = 1e-6;
/// Half-width of the box around the start point that phase I searches.
const PHASE1_RADIUS: f64 = 500.0;
/// Largest stationarity residual an Optimal result may carry.
const STATIONARITY_TOL: f64 = 1e-6;
/// Weight on relative dual changes during polishing.
const POLISH_DAMPING: f64 = 1e-8;

/// Equality system reduced to orthonormal rows, plus the inequalities that
/// actually depend on `u`.
struct Prepared<'a> {
    n: usize,
    c: DVector<f64>,
    c0: f64,
    /// Indices into `program.inequalities`.
    active: Vec<usize>,
    rows: Vec<&'a ExpSumConstraint>,
    /// Orthonormal rows spanning the equality system.
    a: DMatrix<f64>,
    d: DVector<f64>,
    /// Minimum-norm solution of the equality system.
    u0: DVector<f64>,
}

enum Prep<'a> {
    Ready(Prepared<'a>),
    Infeasible(String),
}

fn objective_vector(f: &AffineForm, n: usize) -> DVector<f64> {
    let mut c = DVector::zeros(n);
    for (i, v) in &f.coeffs {
        c[*i] += v;
    }
    c
}

fn equality_system(program: &ExpSumProgram) -> (DMatrix<f64>, DVector<f64>) {
    let n = program.num_coords();
    let m = program.equalities.len();
    let mut a = DMatrix::zeros(m, n);
    let mut d = DVector::zeros(m);
    for (r, e) in program.equalities.iter().enumerate() {
        for (i, v) in &e.form.coeffs {
            a[(r, *i)] += v;
        }
        d[r] = -e.form.constant;
    }
    (a, d)
}

fn prepare<'a>(program: &'a ExpSumProgram, feas_tol: f64) -> Prep<'a> {
    let n = program.num_coords();
    let mut active = Vec::new();
    let mut rows = Vec::new();
    for (i, h) in program.inequalities.iter().enumerate() {
        if h.terms.iter().all(AffineForm::is_constant) && h.tail.is_constant() {
            let v = constraint_value(h, &[]);
            if v > feas_tol {
                return Prep::Infeasible(format!("constant inequality {i} evaluates to {v} > 0"));
            }
        } else {
            active.push(i);
            rows.push(h);
        }
    }

    let (a_full, d_full) = equality_system(program);
    let (a, d, u0) = if a_full.nrows() == 0 {
        (DMatrix::zeros(0, n), DVector::zeros(0), DVector::zeros(n))
    } else {
        let svd = a_full.clone().svd(true, true);
        let sigma_max = svd.singular_values.max();
        let (uu, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > RANK_TOL * sigma_max.max(1.0))
            .collect();
        let r = keep.len();
        let mut a = DMatrix::zeros(r, n);
        let mut d = DVector::zeros(r);
        for (row, &k) in keep.iter().enumerate() {
            a.row_mut(row).copy_from(&vt.row(k));
            d[row] = uu.column(k).dot(&d_full) / svd.singular_values[k];
        }
        let u0 = a.transpose() * &d;
        let resid = (&a_full * &u0 - &d_full).amax();
        if resid > feas_tol * (1.0 + d_full.amax()) {
            return Prep::Infeasible(format!("equality constraints are inconsistent (residual {resid:.3e})"));
        }
        (a, d, u0)
    };

    Prep::Ready(Prepared {
        n,
        c: objective_vector(&program.objective, n),
        c0: program.objective.constant,
        active,
        rows,
        a,
        d,
        u0,
    })
}

struct Centered {
    steps: usize,
    decrement: f64,
    /// The KKT system could not be solved even with regularization.
    failed: bool,
    unbounded: bool,
    stopped_early: bool,
    /// Ended at the Newton tolerance, so the point is central.
    converged: bool,
}

impl Prepared<'_> {
    fn objective(&self, u: &DVector<f64>) -> f64 {
        self.c.dot(u) + self.c0
    }

    fn values(&self, u: &DVector<f64>) -> Vec<f64> {
        self.rows.iter().map(|h| constraint_value(h, u.as_slice())).collect()
    }

    /// Equality-constrained Newton iterations on `τ cᵀu − Σ log(−h_i(u))`
    /// from a strictly feasible `u`.
    fn center(
        &self,
        u: &mut DVector<f64>,
        tau: f64,
        s: &SolverSettings,
        unbounded_check: bool,
        stop: &dyn Fn(&DVector<f64>) -> bool,
    ) -> Centered {
        let n = self.n;
        let p = self.a.nrows();
        let mut out = Centered {
            steps: 0,
            decrement: f64::INFINITY,
            failed: false,
            unbounded: false,
            stopped_early: false,
            converged: false,
        };
        let mut h_old = self.values(u);
        for _ in 0..s.max_newton {
            let mut g = &self.c * tau;
            let mut hess = DMatrix::zeros(n, n);
            for (row, &hv) in self.rows.iter().zip(&h_old) {
                let inv = -1.0 / hv;
                let grad = constraint_grad(row, u.as_slice());
                g += &grad * inv;
                hess.ger(inv * inv, &grad, &grad, 1.0);
                let mut scratch = DVector::zeros(n);
                accumulate(row, u.as_slice(), &mut scratch, &mut hess, 0.0, inv);
            }
            let r = if p > 0 { &self.d - &self.a * &*u } else { DVector::zeros(0) };
            let Some(dx) = self.newton_direction(&hess, &g, &r, s.regularization) else {
                out.failed = true;
                return out;
            };
            // −gᵀΔ survives a nearly singular Hessian where ΔᵀHΔ rounds away.
            let lambda2 = (-g.dot(&dx)).max(dx.dot(&(&hess * &dx))).max(0.0);
            out.decrement = lambda2;
            if lambda2 / 2.0 <= NEWTON_TOL && r.amax() <= EQ_TOL {
                out.converged = true;
                return out;
            }

            // Long directions along nearly flat barrier valleys are capped
            // before the line search.
            let longest = dx.amax();
            let dx = if longest > MAX_DIRECTION { dx * (MAX_DIRECTION / longest) } else { dx };

            // Backtrack into the strictly feasible region, then to Armijo.
            let slope = g.dot(&dx);
            let mut step = 1.0;
            let mut accepted = None;
            while step >= MIN_STEP {
                let cand = &*u + &dx * step;
                let h_new = self.values(&cand);
                if h_new.iter().all(|v| *v < 0.0) {
                    if lambda2 <= FULL_STEP_DECREMENT {
                        accepted = Some((cand, h_new));
                        break;
                    }
                    let log_ratio: f64 = h_new.iter().zip(&h_old).map(|(a, b)| (a / b).ln()).sum();
                    let change = tau * step * self.c.dot(&dx) - log_ratio;
                    if change <= s.alpha * step * slope {
                        accepted = Some((cand, h_new));
                        break;
                    }
                }
                step *= s.beta;
            }
            let Some((cand, h_new)) = accepted else {
                debug!("line search stalled at tau={tau:.3e}, decrement {lambda2:.3e}");
                return out;
            };
            let barrier = |v: &DVector<f64>, h: &[f64]| tau * self.c.dot(v) - h.iter().map(|x| (-x).ln()).sum::<f64>();
            let (f_old, f_new) = (barrier(u, &h_old), barrier(&cand, &h_new));
            let flat = step == 1.0 && f_old - f_new <= STALL_DECREASE * f_new.abs().max(1.0);
            *u = cand;
            h_old = h_new;
            out.steps += 1;
            debug!("newton step {} tau={tau:.3e} t={step:.3e} decrement={lambda2:.3e}", out.steps);
            if unbounded_check && self.objective(u) < s.unbounded_threshold {
                out.unbounded = true;
                return out;
            }
            if stop(u) {
                out.stopped_early = true;
                return out;
            }
            if flat && r.amax() <= EQ_TOL {
                out.converged = true;
                return out;
            }
        }
        out
    }

    /// Solve `[H A'ᵀ; A' 0][Δ; w] = [−g; r]`, raising the regularization
    /// until the factorization succeeds. The system is equilibrated with
    /// a symmetric diagonal scaling and refined against the unscaled one.
    fn newton_direction(&self, hess: &DMatrix<f64>, g: &DVector<f64>, r: &DVector<f64>, reg: f64) -> Option<DVector<f64>> {
        let n = self.n;
        let p = self.a.nrows();
        let scale = DVector::from_fn(n + p, |i, _| if i < n { 1.0 / hess[(i, i)].max(1.0).sqrt() } else { 1.0 });
        let mut rhs = DVector::zeros(n + p);
        rhs.rows_mut(0, n).copy_from(&(-g));
        if p > 0 {
            rhs.rows_mut(n, p).copy_from(r);
        }
        let mut delta = reg;
        for attempt in 0..12 {
            let mut k = DMatrix::zeros(n + p, n + p);
            k.view_mut((0, 0), (n, n)).copy_from(hess);
            for i in 0..n {
                k[(i, i)] += delta;
            }
            if p > 0 {
                k.view_mut((n, 0), (p, n)).copy_from(&self.a);
                k.view_mut((0, n), (n, p)).copy_from(&self.a.transpose());
                // The reduced rows are orthonormal; only regularize this
                // block when the first factorization fails.
                if attempt > 0 {
                    for i in 0..p {
                        k[(n + i, n + i)] -= delta;
                    }
                }
            }
            let scaled = DMatrix::from_fn(n + p, n + p, |i, j| scale[i] * k[(i, j)] * scale[j]);
            let lu = scaled.lu();
            let solve = |b: &DVector<f64>| lu.solve(&b.component_mul(&scale)).map(|y| y.component_mul(&scale));
            if let Some(mut sol) = solve(&rhs) {
                for _ in 0..2 {
                    let resid = &rhs - &k * &sol;
                    match solve(&resid) {
                        Some(corr) if corr.iter().all(|v| v.is_finite()) => sol += corr,
                        _ => break,
                    }
                }
                if sol.iter().all(|v| v.is_finite()) {
                    return Some(sol.rows(0, n).into_owned());
                }
            }
            delta = if delta == 0.0 { 1e-12 } else { delta * 100.0 };
        }
        None
    }

    /// Equality duals for the original rows, by least squares on the
    /// stationarity condition.
    fn equality_duals(&self, program: &ExpSumProgram, u: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
        let m = program.equalities.len();
        if m == 0 {
            return DVector::zeros(0);
        }
        let mut grad = self.c.clone();
        for (i, h) in program.inequalities.iter().enumerate() {
            if lambda[i] != 0.0 {
                grad += constraint_grad(h, u.as_slice()) * lambda[i];
            }
        }
        let (a_full, _) = equality_system(program);
        let at = a_full.transpose();
        let svd = at.svd(true, true);
        svd.solve(&(-grad), RANK_TOL).unwrap_or_else(|_| DVector::zeros(m))
    }
}

fn empty_result(program: &ExpSumProgram, status: Status, u: DVector<f64>, message: Option<String>) -> SolverResult {
    let value = form_value(&program.objective, u.as_slice());
    SolverResult {
        status,
        u,
        lambda: DVector::zeros(program.inequalities.len()),
        nu: DVector::zeros(program.equalities.len()),
        value,
        phase1_newton_steps: 0,
        newton_steps: 0,
        history: Vec::new(),
        residual: Default::default(),
        message,
    }
}

/// Outcome of the feasibility phase.
#[derive(Debug, Clone, PartialEq)]
pub enum Phase1Outcome {
    /// A point with every inequality strictly negative and the equalities
    /// satisfied.
    Feasible { u: DVector<f64>, newton_steps: usize },
    /// The minimal uniform violation `s*` is certified above tolerance.
    Infeasible { lower_bound: f64, newton_steps: usize },
    /// Neither certificate could be produced.
    Undetermined { message: String, newton_steps: usize },
}

/// Find a strictly feasible point of a canonical program.
pub fn phase1(program: &ExpSumProgram, settings: &SolverSettings) -> Result<Phase1Outcome> {
    settings.validate()?;
    Ok(match prepare(program, settings.feas_tol) {
        Prep::Infeasible(_) => Phase1Outcome::Infeasible {
            lower_bound: f64::INFINITY,
            newton_steps: 0,
        },
        Prep::Ready(p) => run_phase1(&p, settings),
    })
}

fn run_phase1(p: &Prepared, s: &SolverSettings) -> Phase1Outcome {
    let h0 = p.values(&p.u0);
    let max_h = h0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_h < -STRICT_MARGIN {
        return Phase1Outcome::Feasible {
            u: p.u0.clone(),
            newton_steps: 0,
        };
    }
    if !max_h.is_finite() {
        return Phase1Outcome::Undetermined {
            message: "starting point overflows".into(),
            newton_steps: 0,
        };
    }

    // minimize s over (u, s). Exponential rows with a negative constant
    // tail c are relaxed on the log scale, Σ exp(a_k − log(−c) − s) <= 1,
    // so large violations shrink at a steady rate; other rows use
    // h_i(u) − s <= 0. Either way s = 0 is feasible iff u is.
    let n = p.n;
    let sv = AffineForm::coord(n);
    let mut s0 = f64::NEG_INFINITY;
    let aug_rows: Vec<ExpSumConstraint> = p
        .rows
        .iter()
        .zip(&h0)
        .map(|(h, &hv)| {
            if !h.terms.is_empty() && h.tail.is_constant() && h.tail.constant < 0.0 {
                let shift = (-h.tail.constant).ln();
                s0 = s0.max((hv - h.tail.constant).ln() - shift);
                ExpSumConstraint {
                    terms: h.terms.iter().map(|t| &t.shift(-shift) - &sv).collect(),
                    tail: AffineForm::constant(-1.0),
                    origin: h.origin.clone(),
                    principal: false,
                }
            } else {
                s0 = s0.max(hv);
                ExpSumConstraint {
                    terms: h.terms.clone(),
                    tail: &h.tail - &sv,
                    origin: h.origin.clone(),
                    principal: false,
                }
            }
        })
        .collect::<Vec<_>>();
    // s >= -1 keeps the relaxation bounded: without it s can fall forever
    // while an epigraph auxiliary rises to match.
    let mut aug_rows = aug_rows;
    aug_rows.push(ExpSumConstraint {
        terms: Vec::new(),
        tail: (-&sv).shift(-1.0),
        origin: p.rows[0].origin.clone(),
        principal: false,
    });
    // A wide box keeps the barrier bounded below when some coordinate,
    // usually an epigraph auxiliary, is free to run off along a ray.
    for j in 0..n {
        let dev = AffineForm::coord(j).shift(-p.u0[j]);
        for sign in [1.0, -1.0] {
            aug_rows.push(ExpSumConstraint {
                terms: Vec::new(),
                tail: dev.scale(sign).shift(-PHASE1_RADIUS),
                origin: p.rows[0].origin.clone(),
                principal: false,
            });
        }
    }
    let mut a = DMatrix::zeros(p.a.nrows(), n + 1);
    a.view_mut((0, 0), (p.a.nrows(), n)).copy_from(&p.a);
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    let aug = Prepared {
        n: n + 1,
        c,
        c0: 0.0,
        active: p.active.clone(),
        rows: aug_rows.iter().collect(),
        a,
        d: p.d.clone(),
        u0: DVector::zeros(n + 1),
    };
    let mut x = DVector::zeros(n + 1);
    x.rows_mut(0, n).copy_from(&p.u0);
    x[n] = s0 + 1.0;

    let m = aug.rows.len() as f64;
    let mut tau = s.tau0;
    let mut steps = 0;
    // Stop as soon as the original rows are satisfied with margin.
    let stop = |x: &DVector<f64>| p.values(&x.rows(0, n).into_owned()).iter().all(|v| *v < -STRICT_MARGIN);
    for _ in 0..s.max_outer {
        let res = aug.center(&mut x, tau, s, false, &stop);
        steps += res.steps;
        let u = x.rows(0, n).into_owned();
        let hmax = p.values(&u).into_iter().fold(f64::NEG_INFINITY, f64::max);
        if hmax < -STRICT_MARGIN {
            return Phase1Outcome::Feasible { u, newton_steps: steps };
        }
        if res.failed {
            return Phase1Outcome::Undetermined {
                message: "KKT system could not be factored during phase I".into(),
                newton_steps: steps,
            };
        }
        // The dual bound below only holds at a central point; keep
        // centering at this weight until Newton converges.
        if !res.converged && res.steps > 0 {
            continue;
        }
        let gap = m / tau;
        let lower = x[n] - gap;
        debug!("phase I tau={tau:.3e} s={:.6e} lower bound={lower:.6e}", x[n]);
        if lower > s.feas_tol {
            return Phase1Outcome::Infeasible {
                lower_bound: lower,
                newton_steps: steps,
            };
        }
        if gap <= s.gap_tol {
            // The interior is thinner than the margin but not empty.
            if hmax < 0.0 {
                return Phase1Outcome::Feasible { u, newton_steps: steps };
            }
            return Phase1Outcome::Undetermined {
                message: format!("minimal violation {:.3e} is within tolerance of zero", x[n]),
                newton_steps: steps,
            };
        }
        tau *= s.mu;
    }
    Phase1Outcome::Undetermined {
        message: "phase I reached the outer iteration limit".into(),
        newton_steps: steps,
    }
}

pub(super) fn solve(program: &ExpSumProgram, s: &SolverSettings) -> SolverResult {
    let n = program.num_coords();
    let p = match prepare(program, s.feas_tol) {
        Prep::Infeasible(msg) => return empty_result(program, Status::Infeasible, DVector::zeros(n), Some(msg)),
        Prep::Ready(p) => p,
    };

    if p.rows.is_empty() {
        return solve_linear(program, &p);
    }

    let (mut u, phase1_steps) = match run_phase1(&p, s) {
        Phase1Outcome::Feasible { u, newton_steps } => (u, newton_steps),
        Phase1Outcome::Infeasible { newton_steps, lower_bound } => {
            let mut r = empty_result(
                program,
                Status::Infeasible,
                p.u0.clone(),
                Some(format!("phase I certifies a violation of at least {lower_bound:.3e}")),
            );
            r.phase1_newton_steps = newton_steps;
            return r;
        }
        Phase1Outcome::Undetermined { message, newton_steps } => {
            let mut r = empty_result(program, Status::MaxIterations, p.u0.clone(), Some(message));
            r.phase1_newton_steps = newton_steps;
            return r;
        }
    };

    let m = p.rows.len() as f64;
    let mut tau = s.tau0;
    let mut history = Vec::new();
    let mut newton_steps = 0;
    let mut status = Status::MaxIterations;
    let mut message = None;
    for _ in 0..s.max_outer {
        let res = p.center(&mut u, tau, s, true, &|_: &DVector<f64>| false);
        newton_steps += res.steps;
        let record = CenteringRecord {
            tau,
            newton_steps: res.steps,
            objective: p.objective(&u),
            gap: m / tau,
            decrement: res.decrement,
        };
        info!(
            "tau={:.3e} newton={} objective={:.12e} gap={:.3e} decrement={:.3e}",
            record.tau, record.newton_steps, record.objective, record.gap, record.decrement
        );
        if s.verbose {
            eprintln!(
                "tau {:>10.3e}  newton {:>3}  objective {:>20.12e}  gap {:>10.3e}  decrement {:>10.3e}",
                record.tau, record.newton_steps, record.objective, record.gap, record.decrement
            );
        }
        history.push(record);
        if res.unbounded {
            status = Status::Unbounded;
            break;
        }
        if res.failed {
            message = Some("KKT system could not be factored".to_string());
            break;
        }
        if m / tau <= s.gap_tol {
            status = Status::Optimal;
            break;
        }
        tau *= s.mu;
    }

    let mut lambda = DVector::zeros(program.inequalities.len());
    if status != Status::Unbounded {
        for (&i, h) in p.active.iter().zip(p.values(&u)) {
            lambda[i] = 1.0 / (tau * -h);
        }
    }
    let mut nu = if status == Status::Unbounded {
        DVector::zeros(program.equalities.len())
    } else {
        p.equality_duals(program, &u, &lambda)
    };
    let mut residual = kkt_residual(program, &u, &lambda, &nu);
    if status == Status::Optimal && residual.stationarity > STATIONARITY_TOL * 1e-3 {
        residual = polish_duals(program, &p, &u, &mut lambda, &mut nu, residual);
    }
    if status == Status::Optimal && residual.equality > s.feas_tol {
        status = Status::MaxIterations;
        message = Some(format!("equality residual {:.3e} above tolerance", residual.equality));
    }
    if status == Status::Optimal && residual.stationarity > STATIONARITY_TOL {
        status = Status::MaxIterations;
        message = Some(format!("stationarity residual {:.3e} above tolerance", residual.stationarity));
    }
    if status == Status::MaxIterations && message.is_none() {
        message = Some("outer iteration limit reached".into());
    }
    SolverResult {
        status,
        value: p.objective(&u),
        u,
        lambda,
        nu,
        phase1_newton_steps: phase1_steps,
        newton_steps,
        history,
        residual,
        message,
    }
}

/// Damped least-squares correction of the barrier duals at a fixed point.
///
/// At large `tau` the slacks `-h` are small enough that rounding in `h`
/// shows up as relative noise in `1 / (tau * -h)`. This solves
/// `min ‖r + Jᵀ δλ + Aᵀ δν‖² + ε Σ (δλ_i / λ_i)²`, so rows with tiny
/// multipliers barely move, and keeps `λ` nonnegative.
fn polish_duals(
    program: &ExpSumProgram,
    p: &Prepared,
    u: &DVector<f64>,
    lambda: &mut DVector<f64>,
    nu: &mut DVector<f64>,
    mut residual: super::KktResidual,
) -> super::KktResidual {
    let (n, mi, me) = (u.len(), lambda.len(), nu.len());
    let (a_full, _) = equality_system(program);
    let grads: Vec<DVector<f64>> = program
        .inequalities
        .iter()
        .map(|h| constraint_grad(h, u.as_slice()))
        .collect();
    let weight = POLISH_DAMPING.sqrt();
    for _ in 0..3 {
        let mut r = p.c.clone();
        for (g, l) in grads.iter().zip(lambda.iter()) {
            r += g * *l;
        }
        r += a_full.transpose() * &*nu;
        let mut m = DMatrix::zeros(n + mi + me, mi + me);
        for (k, g) in grads.iter().enumerate() {
            m.view_mut((0, k), (n, 1)).copy_from(g);
            m[(n + k, k)] = if lambda[k] > 0.0 { weight / lambda[k] } else { 1.0 / weight };
        }
        for k in 0..me {
            for i in 0..n {
                m[(i, mi + k)] = a_full[(k, i)];
            }
            m[(n + mi + k, mi + k)] = weight / nu[k].abs().max(1.0);
        }
        let mut rhs = DVector::zeros(n + mi + me);
        rhs.rows_mut(0, n).copy_from(&(-&r));
        let Ok(step) = m.svd(true, true).solve(&rhs, RANK_TOL) else {
            break;
        };
        let mut alpha: f64 = 1.0;
        for k in 0..mi {
            if step[k] < 0.0 {
                alpha = alpha.min(0.99 * lambda[k] / -step[k]);
            }
        }
        let trial_l = &*lambda + step.rows(0, mi) * alpha;
        let trial_n = &*nu + step.rows(mi, me) * alpha;
        let trial = kkt_residual(program, u, &trial_l, &trial_n);
        if trial.stationarity >= residual.stationarity {
            break;
        }
        debug!("dual polish: stationarity {:.3e} -> {:.3e}", residual.stationarity, trial.stationarity);
        *lambda = trial_l;
        *nu = trial_n;
        residual = trial;
        if residual.stationarity <= STATIONARITY_TOL * 1e-3 {
            break;
        }
    }
    residual
}

/// No inequalities: a linear objective over an affine set is either
/// constant on it or unbounded.
fn solve_linear(program: &ExpSumProgram, p: &Prepared) -> SolverResult {
    let projected = if p.a.nrows() > 0 {
        &p.c - p.a.transpose() * (&p.a * &p.c)
    } else {
        p.c.clone()
    };
    if projected.amax() > 1e-12 * p.c.amax().max(1.0) {
        let mut r = empty_result(program, Status::Unbounded, p.u0.clone(), None);
        r.value = f64::NEG_INFINITY;
        return r;
    }
    let lambda = DVector::zeros(program.inequalities.len());
    let nu = p.equality_duals(program, &p.u0, &lambda);
    let residual = kkt_residual(program, &p.u0, &lambda, &nu);
    SolverResult {
        status: Status::Optimal,
        value: p.objective(&p.u0),
        u: p.u0.clone(),
        lambda,
        nu,
        phase1_newton_steps: 0,
        newton_steps: 0,
        history: Vec::new(),
        residual,
        message: None,
    }
}
