//! Recursive lowering of DGP problems to [`ExpSumProgram`].

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::graph::{graph_eye_minus_inv, graph_pf_eigenvalue};
use super::retrieve::{ConstraintSlot, PrincipalRow, RetrievalMap, VariableSlot};
use super::{AffineForm, ExpSumProgram, Owner, ProgramBuilder};
use crate::atoms::{Atom, Curvature, Monotonicity};
use crate::dgp::{explain, Analyzer};
use crate::error::{Error, Result};
use crate::expr::{apply, scalar_constant, Assignment, ExprKind, Expression, Shape};
use crate::problem::{ConstraintKind, Problem, Sense};

/// Largest number of subsets `sum_largest` may expand into.
pub const SUM_LARGEST_LIMIT: usize = 10_000;

/// Whether a node is bounded from above (epigraph) or below (hypograph).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Mode {
    Upper,
    Lower,
}

impl Mode {
    fn flip(self) -> Mode {
        match self {
            Mode::Upper => Mode::Lower,
            Mode::Lower => Mode::Upper,
        }
    }

    /// Coefficient of `t` in a normalized row `Σ exp(w_k ∓ t) − 1`.
    fn normal_sign(self) -> f64 {
        match self {
            Mode::Upper => -1.0,
            Mode::Lower => 1.0,
        }
    }
}

/// One inequality row in terms of a yet-unallocated output coordinate `t`:
/// `Σ exp(a_k + c_k t) + f + c t <= 0`.
#[derive(Debug, Clone)]
struct RowTemplate {
    terms: Vec<(AffineForm, f64)>,
    tail: (AffineForm, f64),
}

impl RowTemplate {
    /// `Σ_k exp(z_k − σ t) − 1` style row with unit coefficients on `t`.
    fn lse(zs: Vec<AffineForm>, mode: Mode) -> RowTemplate {
        let c = mode.normal_sign();
        RowTemplate {
            terms: zs.into_iter().map(|z| (z, c)).collect(),
            tail: (AffineForm::constant(-1.0), 0.0),
        }
    }

    fn affine(f: AffineForm, c: f64) -> RowTemplate {
        RowTemplate {
            terms: Vec::new(),
            tail: (f, c),
        }
    }

    fn tail_is_minus_one(&self) -> bool {
        self.tail.1 == 0.0 && self.tail.0.is_constant() && self.tail.0.constant == -1.0
    }

    /// Rows of the form `exp(F(u) ∓ t) − 1` whose gradient at an active
    /// point is that of `F(u) ∓ t`. Substituting a bound for `t` keeps the
    /// dual of such a row equal to the dual of the log-space relation.
    fn is_normalized(&self, mode: Mode) -> bool {
        !self.terms.is_empty() && self.tail_is_minus_one() && self.terms.iter().all(|(_, c)| *c == mode.normal_sign())
    }

    /// The row with `t` replaced by a form.
    fn instantiate(&self, t: &AffineForm) -> (Vec<AffineForm>, AffineForm) {
        let terms = self.terms.iter().map(|(a, c)| a + &t.scale(*c)).collect();
        let tail = &self.tail.0 + &t.scale(self.tail.1);
        (terms, tail)
    }

    /// Closed form for `t` when a lone row pins it to an affine value.
    fn solve_affine(&self, mode: Mode) -> Option<AffineForm> {
        let sign_ok = |c: f64| match mode {
            Mode::Upper => c < 0.0,
            Mode::Lower => c > 0.0,
        };
        match self.terms.as_slice() {
            [] if sign_ok(self.tail.1) => Some(self.tail.0.scale(-1.0 / self.tail.1)),
            [(a, c)] if self.tail_is_minus_one() && sign_ok(*c) => Some(a.scale(-1.0 / c)),
            _ => None,
        }
    }
}

/// How one output entry of an atom node is represented.
#[derive(Debug, Clone)]
enum Rule {
    Affine(AffineForm),
    Rows(Vec<RowTemplate>),
}

/// Row-major matrix of affine forms; 1×1 matrices broadcast.
#[derive(Debug, Clone)]
struct Forms {
    shape: Shape,
    data: Vec<AffineForm>,
}

impl Forms {
    fn get(&self, i: usize, j: usize) -> &AffineForm {
        if self.shape.is_scalar() {
            &self.data[0]
        } else {
            &self.data[i * self.shape.cols + j]
        }
    }
}

struct Lowerer {
    builder: ProgramBuilder,
    analyzer: Analyzer,
    vars: HashMap<String, (Shape, usize)>,
    memo: HashMap<(usize, Mode), Forms>,
    /// Rewritten subtrees, retained so node identities stay unique.
    keep_alive: Vec<Expression>,
}

/// Lower a DGP problem to log-space standard form, together with the map
/// needed to translate a canonical solution back.
pub fn lower(problem: &Problem) -> Result<(ExpSumProgram, RetrievalMap)> {
    let report = explain(problem);
    if !report.is_dgp {
        return Err(Error::NotDgp(Box::new(report)));
    }
    let mut l = Lowerer {
        builder: ProgramBuilder::new(),
        analyzer: Analyzer::new(),
        vars: HashMap::new(),
        memo: HashMap::new(),
        keep_alive: Vec::new(),
    };

    let mut variables = Vec::new();
    for (name, shape) in problem.variables() {
        let start = l.builder.program().num_coords();
        for i in 0..shape.rows {
            for j in 0..shape.cols {
                l.builder.variable_coord(name, i, j);
            }
        }
        l.vars.insert(name.clone(), (*shape, start));
        variables.push(VariableSlot {
            name: name.clone(),
            shape: *shape,
            start,
        });
    }

    l.builder.set_owner(Owner::Objective);
    let objective = match problem.sense {
        Sense::Minimize => l.lower_scalar_output(&problem.objective, Mode::Upper)?,
        Sense::Maximize => -&l.lower_scalar_output(&problem.objective, Mode::Lower)?,
    };
    l.builder.set_objective(objective.clone());

    let mut constraints = Vec::new();
    for (k, c) in problem.constraints.iter().enumerate() {
        l.builder.set_owner(Owner::Constraint(k));
        let rows = match c.kind {
            ConstraintKind::LessEq => l.lower_less_eq(&c.lhs, &c.rhs)?,
            ConstraintKind::Eq => l.lower_equality(&c.lhs, &c.rhs)?,
        };
        constraints.push(ConstraintSlot {
            id: c.id,
            kind: c.kind,
            shape: c.shape(),
            rows,
        });
    }

    let program = l.builder.finish();
    let map = RetrievalMap {
        sense: problem.sense,
        variables,
        constraints,
        objective_offset: objective.constant,
        num_coords: program.num_coords(),
        num_inequalities: program.inequalities.len(),
        num_equalities: program.equalities.len(),
    };
    Ok((program, map))
}

fn entry_label(shape: Shape, k: usize) -> String {
    format!("({}, {})", k / shape.cols, k % shape.cols)
}

impl Lowerer {
    fn lower_scalar_output(&mut self, e: &Expression, mode: Mode) -> Result<AffineForm> {
        Ok(self.lower(e, mode)?.data.remove(0))
    }

    fn lower_less_eq(&mut self, lhs: &Expression, rhs: &Expression) -> Result<Vec<PrincipalRow>> {
        let shape = lhs.shape();
        let cl = self.analyzer.curvature(lhs);
        let cr = self.analyzer.curvature(rhs);
        let mut rows = Vec::with_capacity(shape.numel());
        if cr.is_affine() {
            let bound = self.lower(rhs, Mode::Lower)?;
            let entries = self.root_rules(lhs, Mode::Upper)?;
            for (k, rule) in entries.into_iter().enumerate() {
                let b = bound.get(k / shape.cols, k % shape.cols).clone();
                rows.push(self.bounded_row(rule, &b, Mode::Upper, shape, k));
            }
        } else if cl.is_affine() {
            let bound = self.lower(lhs, Mode::Upper)?;
            let entries = self.root_rules(rhs, Mode::Lower)?;
            for (k, rule) in entries.into_iter().enumerate() {
                let a = bound.get(k / shape.cols, k % shape.cols).clone();
                rows.push(self.bounded_row(rule, &a, Mode::Lower, shape, k));
            }
        } else {
            let l = self.lower(lhs, Mode::Upper)?;
            let r = self.lower(rhs, Mode::Lower)?;
            for k in 0..shape.numel() {
                let (i, j) = (k / shape.cols, k % shape.cols);
                let idx = self
                    .builder
                    .push_inequality(Vec::new(), l.get(i, j) - r.get(i, j), format!("leq {}", entry_label(shape, k)));
                self.builder.mark_principal_inequality(idx);
                rows.push(PrincipalRow::Inequality(idx));
            }
        }
        Ok(rows)
    }

    /// Principal row for one entry whose other side is the affine `bound`.
    fn bounded_row(&mut self, rule: Rule, bound: &AffineForm, mode: Mode, shape: Shape, k: usize) -> PrincipalRow {
        let source = format!("leq {}", entry_label(shape, k));
        let (terms, tail) = match rule {
            Rule::Rows(rows) if rows.len() == 1 && rows[0].is_normalized(mode) => rows[0].instantiate(bound),
            other => {
                let z = self.materialize(other, mode);
                let tail = match mode {
                    Mode::Upper => &z - bound,
                    Mode::Lower => bound - &z,
                };
                (Vec::new(), tail)
            }
        };
        let idx = self.builder.push_inequality(terms, tail, source);
        self.builder.mark_principal_inequality(idx);
        PrincipalRow::Inequality(idx)
    }

    fn lower_equality(&mut self, lhs: &Expression, rhs: &Expression) -> Result<Vec<PrincipalRow>> {
        let shape = lhs.shape();
        let l = self.lower(lhs, Mode::Upper)?;
        let r = self.lower(rhs, Mode::Upper)?;
        let mut rows = Vec::with_capacity(shape.numel());
        for k in 0..shape.numel() {
            let (i, j) = (k / shape.cols, k % shape.cols);
            let idx = self
                .builder
                .push_equality(l.get(i, j) - r.get(i, j), format!("eq {}", entry_label(shape, k)));
            self.builder.mark_principal_equality(idx);
            rows.push(PrincipalRow::Equality(idx));
        }
        Ok(rows)
    }

    /// Per-entry rules for the root of a constraint side, so the caller can
    /// fold a bound into a single row. Non-atom and affine roots come back
    /// as `Rule::Affine`.
    fn root_rules(&mut self, e: &Expression, mode: Mode) -> Result<Vec<Rule>> {
        let c = self.analyzer.curvature(e);
        match e.kind() {
            ExprKind::Atom { atom, args }
                if !c.is_affine() && !matches!(atom, Atom::Resolvent(_)) && !atom.curvature().is_affine() =>
            {
                let children = self.lower_children(atom, args, mode)?;
                self.rules(atom, &children, e.shape(), mode)
            }
            _ => Ok(self.lower(e, mode)?.data.into_iter().map(Rule::Affine).collect()),
        }
    }

    fn lower(&mut self, e: &Expression, mode: Mode) -> Result<Forms> {
        let curv = self.analyzer.curvature(e);
        let mode = if curv.is_affine() { Mode::Upper } else { mode };
        let key = (e.node_id(), mode);
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let shape = e.shape();
        let forms = match e.kind() {
            ExprKind::Variable { name } => {
                let (_, start) = self.vars[name];
                Forms {
                    shape,
                    data: (0..shape.numel()).map(|k| AffineForm::coord(start + k)).collect(),
                }
            }
            ExprKind::Constant(m) => logged(m),
            ExprKind::Atom { .. } if curv == Curvature::Constant => logged(&e.evaluate(&Assignment::new())?),
            ExprKind::Atom {
                atom: Atom::Resolvent(s),
                args,
            } => {
                let rewritten = rewrite_resolvent(*s, &args[0])?;
                self.keep_alive.push(rewritten.clone());
                self.lower(&rewritten, mode)?
            }
            ExprKind::Atom { atom, args } => {
                let children = self.lower_children(atom, args, mode)?;
                if atom.curvature().is_affine() {
                    affine_combination(atom, &children, shape)
                } else {
                    let rules = self.rules(atom, &children, shape, mode)?;
                    let data = rules.into_iter().map(|r| self.materialize(r, mode)).collect();
                    Forms { shape, data }
                }
            }
        };
        self.memo.insert(key, forms.clone());
        Ok(forms)
    }

    fn lower_children(&mut self, atom: &Atom, args: &[Expression], mode: Mode) -> Result<Vec<Forms>> {
        args.iter()
            .enumerate()
            .map(|(k, a)| {
                let m = match atom.monotonicity(k) {
                    Monotonicity::Nonincreasing => mode.flip(),
                    _ => mode,
                };
                self.lower(a, m)
            })
            .collect()
    }

    /// Turn a rule into an affine form, allocating an auxiliary when rows
    /// are needed.
    fn materialize(&mut self, rule: Rule, mode: Mode) -> AffineForm {
        match rule {
            Rule::Affine(f) => f,
            Rule::Rows(rows) => {
                if let [row] = rows.as_slice() {
                    if let Some(f) = row.solve_affine(mode) {
                        return f;
                    }
                }
                let tag = match mode {
                    Mode::Upper => "epigraph",
                    Mode::Lower => "hypograph",
                };
                let t = self.builder.aux(tag);
                for row in &rows {
                    let (terms, tail) = row.instantiate(&t);
                    self.builder.push_inequality(terms, tail, tag);
                }
                t
            }
        }
    }

    fn rules(&mut self, atom: &Atom, ch: &[Forms], shape: Shape, mode: Mode) -> Result<Vec<Rule>> {
        let wrong_side = || {
            Error::Internal(format!(
                "atom `{}` cannot be bounded from {}",
                atom.label(),
                if mode == Mode::Upper { "above" } else { "below" }
            ))
        };
        let convex = atom.curvature().is_convex();
        if convex != (mode == Mode::Upper) {
            return Err(wrong_side());
        }
        let entries = |f: &dyn Fn(usize, usize) -> Rule| -> Vec<Rule> {
            (0..shape.numel()).map(|k| f(k / shape.cols, k % shape.cols)).collect()
        };
        let all = |f: &Forms| f.data.clone();
        let single = |rows: Vec<RowTemplate>| vec![Rule::Rows(rows)];
        let rules = match atom {
            Atom::Add => entries(&|i, j| {
                Rule::Rows(vec![RowTemplate::lse(ch.iter().map(|c| c.get(i, j).clone()).collect(), mode)])
            }),
            Atom::Sum => single(vec![RowTemplate::lse(all(&ch[0]), mode)]),
            Atom::Trace => {
                let n = ch[0].shape.rows;
                single(vec![RowTemplate::lse((0..n).map(|i| ch[0].get(i, i).clone()).collect(), mode)])
            }
            Atom::MatMul => {
                let inner = ch[0].shape.cols;
                entries(&|i, j| {
                    Rule::Rows(vec![RowTemplate::lse(
                        (0..inner).map(|k| ch[0].get(i, k) + ch[1].get(k, j)).collect(),
                        mode,
                    )])
                })
            }
            Atom::PNorm(p) => single(vec![RowTemplate {
                terms: all(&ch[0]).into_iter().map(|z| (z.scale(*p), -p)).collect(),
                tail: (AffineForm::constant(-1.0), 0.0),
            }]),
            Atom::Exp => entries(&|i, j| {
                Rule::Rows(vec![RowTemplate {
                    terms: vec![(ch[0].get(i, j).clone(), 0.0)],
                    tail: (AffineForm::constant(0.0), -1.0),
                }])
            }),
            Atom::Max if ch.len() == 1 => single(all(&ch[0]).into_iter().map(|z| RowTemplate::affine(z, -1.0)).collect()),
            Atom::Max => entries(&|i, j| {
                Rule::Rows(ch.iter().map(|c| RowTemplate::affine(c.get(i, j).clone(), -1.0)).collect())
            }),
            Atom::SumLargest(r) => {
                let zs = all(&ch[0]);
                let rows = subsets(zs.len(), *r)?
                    .into_iter()
                    .map(|s| RowTemplate::lse(s.into_iter().map(|k| zs[k].clone()).collect(), mode))
                    .collect();
                single(rows)
            }
            Atom::PfEigenvalue => {
                let n = ch[0].shape.rows;
                vec![Rule::Affine(graph_pf_eigenvalue(&mut self.builder, &all(&ch[0]), n))]
            }
            Atom::EyeMinusInv => {
                let n = ch[0].shape.rows;
                graph_eye_minus_inv(&mut self.builder, &all(&ch[0]), n)
                    .into_iter()
                    .map(Rule::Affine)
                    .collect()
            }
            Atom::Min if ch.len() == 1 => single(all(&ch[0]).into_iter().map(|z| RowTemplate::affine(-&z, 1.0)).collect()),
            Atom::Min => entries(&|i, j| {
                Rule::Rows(ch.iter().map(|c| RowTemplate::affine(-c.get(i, j), 1.0)).collect())
            }),
            Atom::OneMinus => entries(&|i, j| {
                Rule::Rows(vec![RowTemplate {
                    terms: vec![(AffineForm::constant(0.0), 1.0), (ch[0].get(i, j).clone(), 0.0)],
                    tail: (AffineForm::constant(-1.0), 0.0),
                }])
            }),
            Atom::DiffPos => entries(&|i, j| {
                let (z1, z2) = (ch[0].get(i, j), ch[1].get(i, j));
                Rule::Rows(vec![RowTemplate {
                    terms: vec![(-z1, 1.0), (z2 - z1, 0.0)],
                    tail: (AffineForm::constant(-1.0), 0.0),
                }])
            }),
            Atom::HarmonicMean => {
                let zs = all(&ch[0]);
                let ln_n = (zs.len() as f64).ln();
                single(vec![RowTemplate::lse(zs.iter().map(|z| (-z).shift(-ln_n)).collect(), mode)])
            }
            Atom::Log => entries(&|i, j| {
                Rule::Rows(vec![RowTemplate {
                    terms: vec![(AffineForm::constant(0.0), 1.0)],
                    tail: (-ch[0].get(i, j), 0.0),
                }])
            }),
            Atom::Entropy => entries(&|i, j| {
                let z = ch[0].get(i, j);
                Rule::Rows(vec![RowTemplate {
                    terms: vec![(-z, 1.0)],
                    tail: (z.clone(), 0.0),
                }])
            }),
            _ => return Err(wrong_side()),
        };
        Ok(rules)
    }
}

fn logged(m: &DMatrix<f64>) -> Forms {
    let shape = Shape::of(m);
    let data = (0..shape.numel())
        .map(|k| AffineForm::constant(m[(k / shape.cols, k % shape.cols)].ln()))
        .collect();
    Forms { shape, data }
}

/// `(sI − X)^{-1} = s^{-1} (I − X/s)^{-1}`.
fn rewrite_resolvent(s: f64, x: &Expression) -> Result<Expression> {
    let s_const = scalar_constant(s)?;
    let scaled = apply(Atom::Div, vec![x.clone(), s_const])?;
    let inv = apply(Atom::EyeMinusInv, vec![scaled])?;
    apply(Atom::Mul, vec![scalar_constant(1.0 / s)?, inv])
}

fn affine_combination(atom: &Atom, ch: &[Forms], shape: Shape) -> Forms {
    let entry = |f: &dyn Fn(usize, usize) -> AffineForm| Forms {
        shape,
        data: (0..shape.numel()).map(|k| f(k / shape.cols, k % shape.cols)).collect(),
    };
    match atom {
        Atom::Mul => entry(&|i, j| ch[0].get(i, j) + ch[1].get(i, j)),
        Atom::Div => entry(&|i, j| ch[0].get(i, j) - ch[1].get(i, j)),
        Atom::Pow(a) => entry(&|i, j| ch[0].get(i, j).scale(*a)),
        Atom::GeoMean => {
            let n = ch[0].data.len() as f64;
            let sum = ch[0].data.iter().fold(AffineForm::default(), |acc, z| &acc + z);
            entry(&|_, _| sum.scale(1.0 / n))
        }
        Atom::Index { row, col } => entry(&|_, _| ch[0].get(*row, *col).clone()),
        Atom::Slice { rows, cols } => entry(&|i, j| ch[0].get(rows.0 + i, cols.0 + j).clone()),
        Atom::VStack => {
            let mut data = Vec::with_capacity(shape.numel());
            for c in ch {
                data.extend(c.data.iter().cloned());
            }
            Forms { shape, data }
        }
        other => unreachable!("`{}` is not log-log affine", other.name()),
    }
}

fn binomial(n: usize, r: usize) -> Option<usize> {
    let r = r.min(n - r);
    let mut acc: usize = 1;
    for k in 0..r {
        acc = acc.checked_mul(n - k)? / (k + 1);
    }
    Some(acc)
}

/// All `r`-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, r: usize) -> Result<Vec<Vec<usize>>> {
    match binomial(n, r) {
        Some(c) if c <= SUM_LARGEST_LIMIT => {}
        _ => {
            return Err(Error::ExpansionTooLarge {
                n,
                r,
                limit: SUM_LARGEST_LIMIT,
            })
        }
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut k = r;
        while k > 0 && idx[k - 1] == n - r + k - 1 {
            k -= 1;
        }
        if k == 0 {
            return Ok(out);
        }
        idx[k - 1] += 1;
        for m in k..r {
            idx[m] = idx[m - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{variable, Shape};

    fn var(n: &str) -> Expression {
        variable(n, Shape::scalar()).unwrap()
    }

    fn c(v: f64) -> Expression {
        scalar_constant(v).unwrap()
    }

    #[test]
    fn monomial_objective_is_affine() {
        let p = Problem::minimize(&var("x") * &var("y"), vec![]).unwrap();
        let (prog, map) = lower(&p).unwrap();
        assert_eq!(prog.objective.coeffs, vec![(0, 1.0), (1, 1.0)]);
        assert!(prog.inequalities.is_empty());
        assert_eq!(map.num_coords, 2);
    }

    #[test]
    fn posynomial_bound_is_one_row() {
        let (x, y) = (var("x"), var("y"));
        let p = Problem::minimize(&x / &y, vec![(&x + &y).le(&c(1.0)).unwrap()]).unwrap();
        let (prog, map) = lower(&p).unwrap();
        assert_eq!(prog.inequalities.len(), 1);
        let h = &prog.inequalities[0];
        assert!(h.principal);
        assert_eq!(h.terms, vec![AffineForm::coord(0), AffineForm::coord(1)]);
        assert_eq!(h.tail, AffineForm::constant(-1.0));
        assert_eq!(map.constraints[0].rows, vec![PrincipalRow::Inequality(0)]);
    }

    #[test]
    fn nonaffine_sides_are_chained() {
        let (x, y) = (var("x"), var("y"));
        let lhs = apply(Atom::Exp, vec![&y / &x]).unwrap();
        let rhs = apply(Atom::Log, vec![y.clone()]).unwrap();
        let p = Problem::minimize(&x * &y, vec![lhs.le(&rhs).unwrap()]).unwrap();
        let (prog, _) = lower(&p).unwrap();
        assert_eq!(prog.inequalities.len(), 3);
        assert_eq!(prog.inequalities.iter().filter(|h| h.principal).count(), 1);
        let principal = prog.inequalities.iter().find(|h| h.principal).unwrap();
        assert!(principal.terms.is_empty());
        assert_eq!(principal.tail.coeffs, vec![(2, 1.0), (3, -1.0)]);
    }

    #[test]
    fn equalities_are_affine_rows() {
        let (x, y) = (var("x"), var("y"));
        let p = Problem::maximize(x.clone(), vec![(&x * &y).equals(&c(2.0)).unwrap()]).unwrap();
        let (prog, _) = lower(&p).unwrap();
        assert_eq!(prog.equalities.len(), 1);
        assert!((prog.equalities[0].form.constant + 2f64.ln()).abs() < 1e-15);
        assert_eq!(prog.objective.coeffs, vec![(0, -1.0)]);
    }

    #[test]
    fn non_dgp_is_rejected() {
        let x = var("x");
        let p = Problem::minimize(apply(Atom::OneMinus, vec![x]).unwrap(), vec![]).unwrap();
        assert!(matches!(lower(&p), Err(Error::NotDgp(_))));
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).unwrap().len(), 6);
        assert_eq!(subsets(3, 3).unwrap(), vec![vec![0, 1, 2]]);
        assert!(matches!(subsets(40, 20), Err(Error::ExpansionTooLarge { .. })));
    }

    #[test]
    fn constant_subtrees_fold() {
        let x = var("x");
        let k = apply(Atom::Exp, vec![c(1.0)]).unwrap();
        let p = Problem::minimize(&x * &k, vec![]).unwrap();
        let (prog, _) = lower(&p).unwrap();
        assert!((prog.objective.constant - 1.0).abs() < 1e-15);
        let bad = apply(Atom::Log, vec![c(0.5)]).unwrap();
        let p = Problem::minimize(&x * &bad, vec![]).unwrap();
        assert!(matches!(lower(&p), Err(Error::Domain(_))));
    }
}
