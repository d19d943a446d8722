//! Immutable expression trees over positive variables.

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::atoms::Atom;
use crate::error::{DomainError, Error, Result};

/// Rows × columns. Scalars are 1×1, vectors n×1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub rows: usize,
    pub cols: usize,
}

impl Shape {
    pub fn new(rows: usize, cols: usize) -> Result<Shape> {
        if rows == 0 || cols == 0 {
            return Err(Error::Construction(format!("shape {rows}x{cols} has an empty dimension")));
        }
        Ok(Shape { rows, cols })
    }

    pub const fn scalar() -> Shape {
        Shape { rows: 1, cols: 1 }
    }

    pub fn of(m: &DMatrix<f64>) -> Shape {
        Shape {
            rows: m.nrows(),
            cols: m.ncols(),
        }
    }

    pub fn is_scalar(self) -> bool {
        self.rows == 1 && self.cols == 1
    }

    pub fn is_square(self) -> bool {
        self.rows == self.cols
    }

    pub fn numel(self) -> usize {
        self.rows * self.cols
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    /// A positive decision variable.
    Variable { name: String },
    /// Strictly positive, finite data.
    Constant(DMatrix<f64>),
    Atom { atom: Atom, args: Vec<Expression> },
}

#[derive(Debug, PartialEq)]
pub struct Node {
    kind: ExprKind,
    shape: Shape,
}

/// A shared, immutable expression node. Cloning is cheap; equality is
/// structural.
#[derive(Clone)]
pub struct Expression(Arc<Node>);

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expression({self})")
    }
}

/// A positive variable leaf.
pub fn variable(name: &str, shape: Shape) -> Result<Expression> {
    if name.is_empty() {
        return Err(Error::Construction("variable name must be nonempty".into()));
    }
    Shape::new(shape.rows, shape.cols)?;
    Ok(Expression::from_node(ExprKind::Variable { name: name.to_string() }, shape))
}

/// A positive constant leaf. Zero, negative, NaN, and infinite entries are
/// rejected.
pub fn constant(values: DMatrix<f64>) -> Result<Expression> {
    let shape = Shape::new(values.nrows(), values.ncols())?;
    for i in 0..values.nrows() {
        for j in 0..values.ncols() {
            let v = values[(i, j)];
            if !(v > 0.0 && v.is_finite()) {
                let mut e = DomainError::new(format!("constants must be positive and finite; found {v}"));
                e.entry = Some((i, j));
                return Err(e.into());
            }
        }
    }
    Ok(Expression::from_node(ExprKind::Constant(values), shape))
}

pub fn scalar_constant(value: f64) -> Result<Expression> {
    constant(DMatrix::from_element(1, 1, value))
}

/// Apply an atom to children, checking arity and shapes.
pub fn apply(atom: Atom, args: Vec<Expression>) -> Result<Expression> {
    let shapes: Vec<Shape> = args.iter().map(Expression::shape).collect();
    let shape = atom.output_shape(&shapes)?;
    Ok(Expression::from_node(ExprKind::Atom { atom, args }, shape))
}

/// Apply an atom by registry name with static parameters.
pub fn apply_named(name: &str, params: &[f64], args: Vec<Expression>) -> Result<Expression> {
    apply(Atom::from_name(name, params)?, args)
}

/// Variable values keyed by name.
pub type Assignment = HashMap<String, DMatrix<f64>>;

impl Expression {
    fn from_node(kind: ExprKind, shape: Shape) -> Expression {
        Expression(Arc::new(Node { kind, shape }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn shape(&self) -> Shape {
        self.0.shape
    }

    /// Children of an atom node; empty for leaves.
    pub fn args(&self) -> &[Expression] {
        match &self.0.kind {
            ExprKind::Atom { args, .. } => args,
            _ => &[],
        }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match &self.0.kind {
            ExprKind::Atom { atom, .. } => Some(atom),
            _ => None,
        }
    }

    /// Pointer identity of the underlying node, used for memo tables.
    pub(crate) fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    /// Short label for diagnostics: `var x`, `const`, or the atom label.
    pub fn label(&self) -> String {
        match &self.0.kind {
            ExprKind::Variable { name } => format!("var {name}"),
            ExprKind::Constant(_) => "const".to_string(),
            ExprKind::Atom { atom, .. } => atom.label(),
        }
    }

    /// Variables in first-appearance (depth-first, left-to-right) order.
    pub fn variables(&self) -> Vec<(String, Shape)> {
        let mut out = Vec::new();
        self.collect_variables(&mut out);
        out
    }

    pub(crate) fn collect_variables(&self, out: &mut Vec<(String, Shape)>) {
        match &self.0.kind {
            ExprKind::Variable { name } => {
                if !out.iter().any(|(n, s)| n == name && *s == self.shape()) {
                    out.push((name.clone(), self.shape()));
                }
            }
            ExprKind::Constant(_) => {}
            ExprKind::Atom { args, .. } => args.iter().for_each(|a| a.collect_variables(out)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.0.kind {
            ExprKind::Variable { .. } => false,
            ExprKind::Constant(_) => true,
            ExprKind::Atom { args, .. } => args.iter().all(Expression::is_constant),
        }
    }

    /// Numeric value at `assignment`, computed bottom-up.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<DMatrix<f64>> {
        let mut memo = HashMap::new();
        let mut path = Vec::new();
        self.eval_inner(assignment, &mut memo, &mut path)
    }

    fn eval_inner(
        &self,
        assignment: &Assignment,
        memo: &mut HashMap<usize, DMatrix<f64>>,
        path: &mut Vec<String>,
    ) -> Result<DMatrix<f64>> {
        if let Some(v) = memo.get(&self.node_id()) {
            return Ok(v.clone());
        }
        path.push(self.label());
        let value = match &self.0.kind {
            ExprKind::Constant(c) => c.clone(),
            ExprKind::Variable { name } => {
                let v = assignment.get(name).ok_or_else(|| {
                    Error::Domain(DomainError::new(format!("no value assigned to variable `{name}`")).at_path(path))
                })?;
                if Shape::of(v) != self.shape() {
                    return Err(Error::Construction(format!(
                        "value for `{name}` has shape {}, expected {}",
                        Shape::of(v),
                        self.shape()
                    )));
                }
                if let Some((i, j)) = (0..v.nrows())
                    .flat_map(|i| (0..v.ncols()).map(move |j| (i, j)))
                    .find(|&(i, j)| !(v[(i, j)] > 0.0 && v[(i, j)].is_finite()))
                {
                    let mut e = DomainError::new(format!("variable `{name}` must be positive; found {}", v[(i, j)]));
                    e.entry = Some((i, j));
                    return Err(e.at_path(path).into());
                }
                v.clone()
            }
            ExprKind::Atom { atom, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for (k, a) in args.iter().enumerate() {
                    path.push(format!("arg {k}"));
                    vals.push(a.eval_inner(assignment, memo, path)?);
                    path.pop();
                }
                atom.eval(&vals).map_err(|e| e.at_path(path))?
            }
        };
        path.pop();
        memo.insert(self.node_id(), value.clone());
        Ok(value)
    }

    /// Replace variables by expressions of the same shape.
    pub fn substitute(&self, subs: &HashMap<String, Expression>) -> Result<Expression> {
        match &self.0.kind {
            ExprKind::Variable { name } => match subs.get(name) {
                Some(e) if e.shape() == self.shape() => Ok(e.clone()),
                Some(e) => Err(Error::Construction(format!(
                    "substitute for `{name}` has shape {}, expected {}",
                    e.shape(),
                    self.shape()
                ))),
                None => Ok(self.clone()),
            },
            ExprKind::Constant(_) => Ok(self.clone()),
            ExprKind::Atom { atom, args } => {
                let args = args.iter().map(|a| a.substitute(subs)).collect::<Result<Vec<_>>>()?;
                apply(atom.clone(), args)
            }
        }
    }

    pub fn pow(&self, a: f64) -> Expression {
        sugar(Atom::Pow(a), vec![self.clone()])
    }

    pub fn index(&self, row: usize, col: usize) -> Result<Expression> {
        apply(Atom::Index { row, col }, vec![self.clone()])
    }

    /// `self <= rhs`, elementwise.
    pub fn le(&self, rhs: &Expression) -> Result<crate::problem::Constraint> {
        crate::problem::Constraint::less_eq(self.clone(), rhs.clone())
    }

    /// `self >= rhs`, stored as `rhs <= self`.
    pub fn ge(&self, rhs: &Expression) -> Result<crate::problem::Constraint> {
        crate::problem::Constraint::less_eq(rhs.clone(), self.clone())
    }

    /// `self == rhs`, elementwise.
    pub fn equals(&self, rhs: &Expression) -> Result<crate::problem::Constraint> {
        crate::problem::Constraint::equal(self.clone(), rhs.clone())
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            ExprKind::Variable { name } => write!(f, "{name}"),
            ExprKind::Constant(c) if c.len() == 1 => write!(f, "{}", c[(0, 0)]),
            ExprKind::Constant(c) => write!(f, "const{}", Shape::of(c)),
            ExprKind::Atom { atom, args } => {
                write!(f, "{}(", atom.label())?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Variable values by name, ordered; convenience for building assignments.
pub fn assignment<I, S>(values: I) -> Assignment
where
    I: IntoIterator<Item = (S, DMatrix<f64>)>,
    S: Into<String>,
{
    values.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

// Operator sugar panics on shape mismatch, like nalgebra's arithmetic;
// use `apply` for fallible construction.
fn sugar(atom: Atom, args: Vec<Expression>) -> Expression {
    match apply(atom, args) {
        Ok(e) => e,
        Err(e) => panic!("{e}"),
    }
}

fn lift(v: f64) -> Expression {
    match scalar_constant(v) {
        Ok(e) => e,
        Err(e) => panic!("{e}"),
    }
}

macro_rules! binary_sugar {
    ($trait:ident, $method:ident, $atom:expr) => {
        impl ops::$trait<&Expression> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                sugar($atom, vec![self.clone(), rhs.clone()])
            }
        }
        impl ops::$trait<Expression> for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                sugar($atom, vec![self, rhs])
            }
        }
        impl ops::$trait<f64> for &Expression {
            type Output = Expression;
            fn $method(self, rhs: f64) -> Expression {
                sugar($atom, vec![self.clone(), lift(rhs)])
            }
        }
        impl ops::$trait<f64> for Expression {
            type Output = Expression;
            fn $method(self, rhs: f64) -> Expression {
                sugar($atom, vec![self, lift(rhs)])
            }
        }
        impl ops::$trait<&Expression> for f64 {
            type Output = Expression;
            fn $method(self, rhs: &Expression) -> Expression {
                sugar($atom, vec![lift(self), rhs.clone()])
            }
        }
        impl ops::$trait<Expression> for f64 {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                sugar($atom, vec![lift(self), rhs])
            }
        }
    };
}

binary_sugar!(Add, add, Atom::Add);
binary_sugar!(Mul, mul, Atom::Mul);
binary_sugar!(Div, div, Atom::Div);

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expression {
        variable("x", Shape::scalar()).unwrap()
    }
    fn y() -> Expression {
        variable("y", Shape::scalar()).unwrap()
    }
    fn s(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn constructors() {
        let v = variable("X", Shape::new(3, 3).unwrap()).unwrap();
        assert_eq!(v.shape(), Shape { rows: 3, cols: 3 });
        assert!(variable("", Shape::scalar()).is_err());
        assert!(Shape::new(0, 2).is_err());

        let c = scalar_constant(1.9).unwrap();
        assert!(matches!(c.kind(), ExprKind::Constant(m) if m[(0, 0)] == 1.9));
        assert!(scalar_constant(1.0).is_ok());
        assert!(matches!(scalar_constant(-1.0), Err(Error::Domain(_))));
        assert!(scalar_constant(0.0).is_err());
        assert!(scalar_constant(f64::NAN).is_err());
        let err = constant(DMatrix::from_row_slice(1, 3, &[1.0, 2.0, f64::INFINITY])).unwrap_err();
        assert!(matches!(err, Error::Domain(ref d) if d.entry == Some((0, 2))));
    }

    #[test]
    fn apply_checks_signature() {
        let xy = apply_named("mul", &[], vec![x(), y()]).unwrap();
        assert_eq!(xy.shape(), Shape::scalar());
        assert!(matches!(apply_named("add", &[], vec![x()]), Err(Error::Signature { .. })));
        assert!(matches!(apply_named("frobnicate", &[], vec![x()]), Err(Error::UnknownAtom { .. })));
        let big = variable("X", Shape::new(3, 3).unwrap()).unwrap();
        let pf = apply_named("pf_eigenvalue", &[], vec![big]).unwrap();
        assert_eq!(pf.shape(), Shape::scalar());
    }

    #[test]
    fn evaluate_monomials() {
        let xy = &x() * &y();
        let a = assignment([("x", s(3.0)), ("y", s(4.0))]);
        assert_eq!(xy.evaluate(&a).unwrap()[(0, 0)], 12.0);

        let a = assignment([("x", s(11.780089932635645)), ("y", s(4.143454698868564))]);
        let v = xy.evaluate(&a).unwrap()[(0, 0)];
        assert!((v - 48.81026898447343).abs() / 48.81026898447343 < 1e-9);
    }

    #[test]
    fn evaluate_pf_eigenvalue() {
        let m = variable("M", Shape::new(2, 2).unwrap()).unwrap();
        let pf = apply(Atom::PfEigenvalue, vec![m]).unwrap();
        let a = assignment([("M", DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]))]);
        let v = pf.evaluate(&a).unwrap()[(0, 0)];
        assert!((v - 5.372281323269014).abs() < 1e-10);
    }

    #[test]
    fn evaluate_reports_missing_and_domain() {
        let e = apply(Atom::Log, vec![x()]).unwrap();
        assert!(e.evaluate(&Assignment::new()).is_err());
        match e.evaluate(&assignment([("x", s(0.5))])) {
            Err(Error::Domain(d)) => assert_eq!(d.path, vec!["log".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(x().evaluate(&assignment([("x", s(-1.0))])).is_err());
    }

    #[test]
    fn shared_subtrees_evaluate_consistently() {
        let shared = apply(Atom::Exp, vec![&x() / &y()]).unwrap();
        let e = &shared + &shared;
        let a = assignment([("x", s(2.0)), ("y", s(3.0))]);
        let v = e.evaluate(&a).unwrap()[(0, 0)];
        assert_eq!(v, 2.0 * (2.0f64 / 3.0).exp());
    }

    #[test]
    fn substitute_replaces_variables() {
        let t = variable("t", Shape::scalar()).unwrap();
        let e = &x() * &y();
        let subs: HashMap<String, Expression> = [("x".to_string(), t.pow(2.0))].into_iter().collect();
        let f = e.substitute(&subs).unwrap();
        let vars: Vec<String> = f.variables().into_iter().map(|(n, _)| n).collect();
        assert_eq!(vars, vec!["t", "y"]);
    }

    #[test]
    fn structural_equality() {
        assert_eq!(&x() * &y(), &x() * &y());
        assert_ne!(&x() * &y(), &y() * &x());
    }
}
