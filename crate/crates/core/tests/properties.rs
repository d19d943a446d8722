use llcp::atoms::{Atom, Curvature, Monotonicity};
use llcp::canon::lower;
use llcp::document::{parse_problem_file, serialize_problem};
use llcp::expr::{apply, assignment, scalar_constant, variable, Expression, Shape};
use llcp::problem::{Problem, Status};
use llcp::solver::{constraint_value_grad_hess, solve, SolverSettings};
use llcp::{curvature, solve_problem};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Tree {
    X,
    Y,
    Const(f64),
    Add(Box<Tree>, Box<Tree>),
    Mul(Box<Tree>, Box<Tree>),
    Div(Box<Tree>, Box<Tree>),
    Max(Box<Tree>, Box<Tree>),
    Min(Box<Tree>, Box<Tree>),
    Pow(f64, Box<Tree>),
    GeoMean(Box<Tree>, Box<Tree>),
    HarmonicMean(Box<Tree>, Box<Tree>),
    PNorm(Box<Tree>, Box<Tree>),
}

fn leaf() -> impl Strategy<Value = Tree> {
    prop_oneof![Just(Tree::X), Just(Tree::Y), (0.5f64..2.0).prop_map(Tree::Const)]
}

/// Arbitrary trees over every positive-domain scalar atom; many are not DGP.
fn any_tree() -> impl Strategy<Value = Tree> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let pair = (inner.clone(), inner.clone());
        prop_oneof![
            pair.clone().prop_map(|(a, b)| Tree::Add(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Mul(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Div(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Max(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Min(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::GeoMean(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::HarmonicMean(a.into(), b.into())),
            pair.prop_map(|(a, b)| Tree::PNorm(a.into(), b.into())),
            (prop::sample::select(vec![-2.0, -1.0, -0.5, 0.5, 1.5, 2.0]), inner)
                .prop_map(|(p, a)| Tree::Pow(p, a.into())),
        ]
    })
}

/// Generalized posynomials: monomials closed under +, *, positive powers,
/// and max.
fn ggp_tree() -> impl Strategy<Value = Tree> {
    let monomial = (0.5f64..2.0, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(c, a, b)| {
        Tree::Mul(
            Box::new(Tree::Const(c)),
            Box::new(Tree::Mul(Box::new(Tree::Pow(a, Box::new(Tree::X))), Box::new(Tree::Pow(b, Box::new(Tree::Y))))),
        )
    });
    monomial.prop_recursive(3, 16, 2, |inner| {
        let pair = (inner.clone(), inner.clone());
        prop_oneof![
            pair.clone().prop_map(|(a, b)| Tree::Add(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Mul(a.into(), b.into())),
            pair.clone().prop_map(|(a, b)| Tree::Max(a.into(), b.into())),
            pair.prop_map(|(a, b)| Tree::PNorm(a.into(), b.into())),
            (0.25f64..3.0, inner).prop_map(|(p, a)| Tree::Pow(p, a.into())),
        ]
    })
}

fn var(name: &str) -> Expression {
    variable(name, Shape::scalar()).unwrap()
}

fn stack(a: &Tree, b: &Tree) -> Expression {
    apply(Atom::VStack, vec![build(a), build(b)]).unwrap()
}

fn build(t: &Tree) -> Expression {
    let two = |atom: Atom, a: &Tree, b: &Tree| apply(atom, vec![build(a), build(b)]).unwrap();
    match t {
        Tree::X => var("x"),
        Tree::Y => var("y"),
        Tree::Const(c) => scalar_constant(*c).unwrap(),
        Tree::Add(a, b) => two(Atom::Add, a, b),
        Tree::Mul(a, b) => two(Atom::Mul, a, b),
        Tree::Div(a, b) => two(Atom::Div, a, b),
        Tree::Max(a, b) => two(Atom::Max, a, b),
        Tree::Min(a, b) => two(Atom::Min, a, b),
        Tree::Pow(p, a) => apply(Atom::Pow(*p), vec![build(a)]).unwrap(),
        Tree::GeoMean(a, b) => apply(Atom::GeoMean, vec![stack(a, b)]).unwrap(),
        Tree::HarmonicMean(a, b) => apply(Atom::HarmonicMean, vec![stack(a, b)]).unwrap(),
        Tree::PNorm(a, b) => apply(Atom::PNorm(2.0), vec![stack(a, b)]).unwrap(),
    }
}

fn eval_at(e: &Expression, x: f64, y: f64) -> Option<f64> {
    let a = assignment([("x", DMatrix::from_element(1, 1, x)), ("y", DMatrix::from_element(1, 1, y))]);
    let v = e.evaluate(&a).ok()?[(0, 0)];
    (v.is_finite() && v > 0.0).then_some(v)
}

fn log_point(rng: &mut ChaCha8Rng) -> (f64, f64) {
    (rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn analyzer_judgments_hold_numerically(tree in any_tree(), seed in any::<u64>()) {
        let e = build(&tree);
        let curv = curvature(&e);
        prop_assume!(curv != Curvature::Unknown);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let (p, q) = (log_point(&mut rng), log_point(&mut rng));
            for theta in [0.25, 0.5, 0.75] {
                let m = (theta * p.0 + (1.0 - theta) * q.0, theta * p.1 + (1.0 - theta) * q.1);
                let (Some(fp), Some(fq), Some(fm)) = (
                    eval_at(&e, p.0.exp(), p.1.exp()),
                    eval_at(&e, q.0.exp(), q.1.exp()),
                    eval_at(&e, m.0.exp(), m.1.exp()),
                ) else {
                    continue;
                };
                let lhs = fm.ln();
                let rhs = theta * fp.ln() + (1.0 - theta) * fq.ln();
                let tol = 1e-9 * (1.0 + lhs.abs().max(rhs.abs()));
                if curv.is_convex() {
                    prop_assert!(lhs <= rhs + tol, "{e} judged {curv}: {lhs} > {rhs}");
                }
                if curv.is_concave() {
                    prop_assert!(lhs >= rhs - tol, "{e} judged {curv}: {lhs} < {rhs}");
                }
            }
        }
    }

    #[test]
    fn generalized_posynomials_are_convex(tree in ggp_tree()) {
        let e = build(&tree);
        prop_assert!(curvature(&e).is_convex(), "{e} judged {}", curvature(&e));
    }

    #[test]
    fn documents_round_trip(obj in ggp_tree(), lhs in ggp_tree(), rhs in any_tree()) {
        let p = Problem::minimize(build(&obj), vec![build(&lhs).le(&build(&rhs)).unwrap()]).unwrap();
        let text = serialize_problem(&p);
        let again = parse_problem_file(&text).unwrap();
        prop_assert_eq!(serialize_problem(&again), text);
    }

    #[test]
    fn canonical_rows_have_psd_hessians(obj in ggp_tree(), con in ggp_tree(), seed in any::<u64>()) {
        let p = Problem::minimize(build(&obj), vec![build(&con).le(&scalar_constant(3.0).unwrap()).unwrap()]).unwrap();
        let (program, _) = lower(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for row in &program.inequalities {
            let u = DVector::from_fn(program.num_coords(), |_, _| rng.random_range(-1.0..1.0));
            let (_, _, h) = constraint_value_grad_hess(row, &u);
            let min_eig = h.clone().symmetric_eigenvalues().min();
            prop_assert!(min_eig >= -1e-9 * h.amax().max(1.0), "min eigenvalue {min_eig}");
        }
    }
}

/// Minimize a generalized posynomial over a box, subject to a second one.
fn boxed_problem(obj: &Tree, con: &Tree) -> Problem {
    let mut cons = vec![build(con).le(&scalar_constant(4.0).unwrap()).unwrap()];
    for v in ["x", "y"] {
        cons.push(var(v).ge(&scalar_constant(0.2).unwrap()).unwrap());
        cons.push(var(v).le(&scalar_constant(5.0).unwrap()).unwrap());
    }
    Problem::minimize(build(obj), cons).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn retrieved_points_are_feasible_and_consistent(obj in ggp_tree(), con in ggp_tree()) {
        let p = boxed_problem(&obj, &con);
        let s = solve_problem(&p, &SolverSettings::default()).unwrap();
        prop_assume!(s.status == Status::Optimal);
        let (x, y) = (s.value("x").unwrap()[(0, 0)], s.value("y").unwrap()[(0, 0)]);
        let f0 = eval_at(&build(&obj), x, y).unwrap();
        prop_assert!((f0 - s.optimal_value).abs() <= 1e-6 * s.optimal_value, "{f0} vs {}", s.optimal_value);
        let f1 = eval_at(&build(&con), x, y).unwrap();
        prop_assert!(f1 <= 4.0 * 1e-6f64.exp(), "constraint value {f1}");
        prop_assert!(s.stats.stationarity <= 1e-6);
        for d in s.dual_values.values() {
            prop_assert!(d[(0, 0)] >= 0.0);
        }
    }

    #[test]
    fn pinned_variables_reproduce_the_original_values(
        obj in ggp_tree(),
        con in ggp_tree(),
        ux in -1.0f64..1.0,
        uy in -1.0f64..1.0,
    ) {
        let (x0, y0) = (ux.exp(), uy.exp());
        let (f0, f1) = (eval_at(&build(&obj), x0, y0).unwrap(), eval_at(&build(&con), x0, y0).unwrap());
        let bound = 2.0f64;
        prop_assume!((f1.ln() - bound.ln()).abs() > 1e-4);
        let p = Problem::minimize(
            build(&obj),
            vec![
                build(&con).le(&scalar_constant(bound).unwrap()).unwrap(),
                var("x").equals(&scalar_constant(x0).unwrap()).unwrap(),
                var("y").equals(&scalar_constant(y0).unwrap()).unwrap(),
            ],
        )
        .unwrap();
        let s = solve_problem(&p, &SolverSettings::default()).unwrap();
        if f1 < bound {
            prop_assert_eq!(s.status, Status::Optimal, "{:?} f1={}", s.stats.message, f1);
            prop_assert!((s.optimal_value.ln() - f0.ln()).abs() <= 1e-7, "{} vs {f0}", s.optimal_value);
        } else {
            prop_assert_eq!(s.status, Status::Infeasible, "{:?} f1={}", s.stats.message, f1);
        }
    }

    #[test]
    fn solves_are_deterministic_and_centering_is_monotone(obj in ggp_tree(), con in ggp_tree()) {
        let (program, _) = lower(&boxed_problem(&obj, &con)).unwrap();
        let a = solve(&program, &SolverSettings::default()).unwrap();
        let b = solve(&program, &SolverSettings::default()).unwrap();
        prop_assert_eq!(a.u.as_slice(), b.u.as_slice());
        prop_assert_eq!(a.lambda.as_slice(), b.lambda.as_slice());
        prop_assert_eq!(a.history.len(), b.history.len());
        for w in a.history.windows(2) {
            prop_assert!(w[1].objective <= w[0].objective + 1e-9 * (1.0 + w[0].objective.abs()));
        }
    }
}

fn monotone_cases() -> Vec<(Atom, Vec<DMatrix<f64>>)> {
    let m = |r: usize, c: usize, v: &[f64]| DMatrix::from_row_slice(r, c, v);
    let sq = m(2, 2, &[0.2, 0.1, 0.15, 0.3]);
    vec![
        (Atom::Add, vec![m(2, 1, &[1.0, 2.0]), m(2, 1, &[0.5, 3.0])]),
        (Atom::Mul, vec![m(1, 1, &[2.0]), m(2, 1, &[0.5, 3.0])]),
        (Atom::Div, vec![m(1, 1, &[2.0]), m(1, 1, &[0.5])]),
        (Atom::Pow(1.7), vec![m(1, 2, &[0.5, 3.0])]),
        (Atom::Pow(-0.6), vec![m(1, 2, &[0.5, 3.0])]),
        (Atom::Max, vec![m(3, 1, &[0.5, 3.0, 1.0])]),
        (Atom::Min, vec![m(1, 1, &[0.5]), m(1, 1, &[2.0])]),
        (Atom::SumLargest(2), vec![m(3, 1, &[0.5, 3.0, 1.0])]),
        (Atom::OneMinus, vec![m(1, 2, &[0.2, 0.6])]),
        (Atom::DiffPos, vec![m(1, 1, &[3.0]), m(1, 1, &[1.0])]),
        (Atom::GeoMean, vec![m(2, 1, &[0.5, 3.0])]),
        (Atom::HarmonicMean, vec![m(2, 1, &[0.5, 3.0])]),
        (Atom::PNorm(3.0), vec![m(2, 1, &[0.5, 3.0])]),
        (Atom::Exp, vec![m(1, 1, &[0.7])]),
        (Atom::Log, vec![m(1, 1, &[2.5])]),
        (Atom::Trace, vec![sq.clone()]),
        (Atom::MatMul, vec![sq.clone(), m(2, 1, &[1.0, 2.0])]),
        (Atom::PfEigenvalue, vec![sq.clone()]),
        (Atom::EyeMinusInv, vec![sq.clone()]),
        (Atom::Resolvent(1.5), vec![sq]),
        (Atom::Sum, vec![m(2, 1, &[0.5, 3.0])]),
        (Atom::Index { row: 1, col: 0 }, vec![m(2, 1, &[0.5, 3.0])]),
        (Atom::VStack, vec![m(1, 1, &[0.5]), m(1, 1, &[3.0])]),
    ]
}

#[test]
fn declared_monotonicity_matches_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (atom, args) in monotone_cases() {
        let base = atom.eval(&args).unwrap();
        for k in 0..args.len() {
            let mono = atom.monotonicity(k);
            for _ in 0..20 {
                let mut bumped = args.clone();
                // Small enough to stay inside bounded domains.
                bumped[k] = bumped[k].map(|v| v * (1.0 + rng.random_range(0.0..0.02)));
                let Ok(out) = atom.eval(&bumped) else {
                    continue;
                };
                for i in 0..out.len() {
                    match mono {
                        Monotonicity::Nondecreasing => assert!(out[i] >= base[i] - 1e-12, "{} arg {k}", atom.label()),
                        Monotonicity::Nonincreasing => assert!(out[i] <= base[i] + 1e-12, "{} arg {k}", atom.label()),
                        Monotonicity::Neither => {}
                    }
                }
            }
        }
    }
}
