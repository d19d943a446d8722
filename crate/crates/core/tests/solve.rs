use llcp::atoms::Atom;
use llcp::canon::{lower, retrieve};
use llcp::canon::{graph_eye_minus_inv, graph_pf_eigenvalue, AffineForm, ExpSumProgram, ProgramBuilder};
use llcp::expr::{apply, scalar_constant, variable, Expression, Shape};
use llcp::problem::{Problem, Status};
use llcp::solver::{kkt_residual, phase1, solve, Phase1Outcome, SolverSettings};
use nalgebra::DMatrix;

fn var(n: &str) -> Expression {
    variable(n, Shape::scalar()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn run(p: &Problem) -> llcp::problem::Solution {
    let (prog, map) = lower(p).unwrap();
    let res = solve(&prog, &SolverSettings::default()).unwrap();
    retrieve(&map, &prog, &res).unwrap()
}

#[test]
fn hello_world() {
    let (x, y) = (var("x"), var("y"));
    let lhs = apply(Atom::Exp, vec![&y / &x]).unwrap();
    let rhs = apply(Atom::Log, vec![y.clone()]).unwrap();
    let c = lhs.le(&rhs).unwrap();
    let id = c.id;
    let p = Problem::minimize(&x * &y, vec![c]).unwrap();
    let s = run(&p);
    assert_eq!(s.status, Status::Optimal, "{:?}", s.stats);
    assert!(rel(s.optimal_value, 48.81026898447343) < 1e-6, "{}", s.optimal_value);
    assert!(rel(s.value("x").unwrap()[(0, 0)], 11.780089932635645) < 1e-5);
    assert!(rel(s.value("y").unwrap()[(0, 0)], 4.143454698868564) < 1e-5);
    assert!(rel(s.dual(id).unwrap()[(0, 0)], 2.843059917747706) < 1e-5, "{}", s.dual(id).unwrap());
}

#[test]
fn pf_completion() {
    let x = variable("X", Shape::new(3, 3).unwrap()).unwrap();
    let known = [((0, 0), 1.0), ((0, 2), 1.9), ((1, 1), 0.8), ((2, 0), 3.2), ((2, 1), 5.9)];
    let mut cons: Vec<_> = known
        .iter()
        .map(|&((i, j), v)| x.index(i, j).unwrap().equals(&scalar_constant(v).unwrap()).unwrap())
        .collect();
    let prod = &(&(&x.index(0, 1).unwrap() * &x.index(1, 0).unwrap()) * &x.index(1, 2).unwrap()) * &x.index(2, 2).unwrap();
    cons.push(prod.equals(&scalar_constant(1.0).unwrap()).unwrap());
    let p = Problem::minimize(apply(Atom::PfEigenvalue, vec![x]).unwrap(), cons).unwrap();
    let (prog, map) = lower(&p).unwrap();
    let res = solve(&prog, &SolverSettings::default()).unwrap();
    let s = retrieve(&map, &prog, &res).unwrap();
    assert_eq!(s.status, Status::Optimal);
    assert!(rel(s.optimal_value, 4.702374203221535) < 1e-6, "{}", s.optimal_value);
    let expect = DMatrix::from_row_slice(3, 3, &[1.0, 4.63616907, 1.9, 0.49991744, 0.8, 0.37774148, 3.2, 5.9, 1.14221476]);
    let got = s.value("X").unwrap();
    for k in 0..9 {
        assert!(rel(got[k], expect[k]) < 1e-6, "{got}");
    }
}

fn one_coord(rows: &[(f64, f64)]) -> ExpSumProgram {
    // rows are exp(a u + b) - 1 <= 0
    let mut b = ProgramBuilder::new();
    let u = AffineForm::coord(b.variable_coord("x", 0, 0));
    for &(a, c) in rows {
        b.push_inequality(vec![u.scale(a).shift(c)], AffineForm::constant(-1.0), "test");
    }
    b.set_objective(u);
    b.finish()
}

#[test]
fn hello_world_residuals_are_small() {
    let (x, y) = (var("x"), var("y"));
    let c = apply(Atom::Exp, vec![&y / &x]).unwrap().le(&apply(Atom::Log, vec![y.clone()]).unwrap()).unwrap();
    let p = Problem::minimize(&x * &y, vec![c]).unwrap();
    let (prog, _) = lower(&p).unwrap();
    let res = solve(&prog, &SolverSettings::default()).unwrap();
    let r = kkt_residual(&prog, &res.u, &res.lambda, &res.nu);
    assert!(r.stationarity <= 1e-6, "{r:?}");
    assert!(r.primal_feasibility <= 1e-9, "{r:?}");
    assert!(r.complementarity <= 1e-6, "{r:?}");
}

#[test]
fn single_exponential_row() {
    let u0 = 2f64.ln();
    let prog = one_coord(&[(-1.0, u0)]);
    let res = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    assert!((res.u[0] - u0).abs() < 1e-6, "{}", res.u[0]);
    assert!((res.lambda[0] - 1.0).abs() < 1e-5, "{}", res.lambda[0]);
}

#[test]
fn phase1_finds_a_point_in_a_slab() {
    let prog = one_coord(&[(1.0, -6.0), (-1.0, 5.0)]);
    match phase1(&prog, &SolverSettings::default()).unwrap() {
        Phase1Outcome::Feasible { u, .. } => assert!(u[0] > 5.0 && u[0] < 6.0, "{u}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn phase1_rejects_a_contradictory_pair() {
    let prog = one_coord(&[(1.0, 0.0), (-1.0, 1.0)]);
    match phase1(&prog, &SolverSettings::default()).unwrap() {
        Phase1Outcome::Infeasible { lower_bound, .. } => assert!(lower_bound > 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn phase1_on_a_pf_graph_is_quick() {
    let m = [[1.0, 2.0, 0.5], [0.3, 4.0, 1.0], [2.0, 0.1, 0.7]];
    let u: Vec<AffineForm> = m.iter().flatten().map(|v: &f64| AffineForm::constant(v.ln())).collect();
    let mut b = ProgramBuilder::new();
    let t = graph_pf_eigenvalue(&mut b, &u, 3);
    b.set_objective(t);
    let prog = b.finish();
    match phase1(&prog, &SolverSettings::default()).unwrap() {
        Phase1Outcome::Feasible { newton_steps, .. } => assert!(newton_steps < 50, "{newton_steps}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sum_constraint_becomes_one_row() {
    let (x, y) = (var("x"), var("y"));
    let c = (&x + &y).le(&scalar_constant(1.0).unwrap()).unwrap();
    let p = Problem::maximize(&x * &y, vec![c]).unwrap();
    let (prog, _) = lower(&p).unwrap();
    let rows: Vec<_> = prog.inequalities.iter().filter(|r| r.principal).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].terms.len(), 2);
    assert!(rows[0].tail.is_constant());
    let s = run(&p);
    assert!(rel(s.optimal_value, 0.25) < 1e-6, "{}", s.optimal_value);
}

#[test]
fn scalar_graphs() {
    let mut b = ProgramBuilder::new();
    let u = [AffineForm::constant(0.3f64.ln())];
    let t = graph_pf_eigenvalue(&mut b, &u, 1);
    assert_eq!(b.program().inequalities.len(), 1);
    let w = graph_eye_minus_inv(&mut b, &u, 1);
    assert_eq!(w.len(), 1);
    assert_eq!(b.program().inequalities.len(), 2);
    assert_eq!(b.program().inequalities[1].terms.len(), 2);
    b.set_objective(&t + &w[0]);
    let res = solve(&b.finish(), &SolverSettings::default()).unwrap();
    assert_eq!(res.status, Status::Optimal);
    // 0.3 * 1/(1 - 0.3)
    assert!((res.value - (0.3f64 / 0.7).ln()).abs() < 1e-6, "{}", res.value);
}

#[test]
fn eye_minus_inv_graph_trace() {
    let half = 0.5f64.ln();
    let u = [half, -800.0, -800.0, half].map(AffineForm::constant);
    let mut b = ProgramBuilder::new();
    let w = graph_eye_minus_inv(&mut b, &u, 2);
    let t = b.aux("trace");
    b.push_inequality(vec![&w[0] - &t, &w[3] - &t], AffineForm::constant(-1.0), "trace");
    b.set_objective(t);
    let res = solve(&b.finish(), &SolverSettings::default()).unwrap();
    assert_eq!(res.status, Status::Optimal, "{:?}", res.message);
    assert!((res.value.exp() - 4.0).abs() < 1e-5, "{}", res.value.exp());
}
