//! JSON problem documents.
//!
//! ```json
//! {"version": 1,
//!  "variables": [{"name": "x", "shape": [1, 1]}, {"name": "y", "shape": [1, 1]}],
//!  "objective": {"sense": "minimize", "expr": ["mul", ["var", "x"], ["var", "y"]]},
//!  "constraints": [{"type": "leq",
//!                   "lhs": ["exp", ["div", ["var", "y"], ["var", "x"]]],
//!                   "rhs": ["log", ["var", "y"]]}]}
//! ```
//!
//! Expressions are prefix arrays. Parameterized atoms put their parameters
//! before the child (`["pow", 2, e]`, `["sum_largest", r, e]`,
//! `["pnorm", p, e]`, `["resolvent", s, e]`), except `["index", e, i, j]`
//! and `["slice", e, r0, r1, c0, c1]`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::atoms::{atom_info, Atom};
use crate::error::{Error, ParseError, ParseErrorKind as K};
use crate::expr::{apply, constant, variable, ExprKind, Expression, Shape};
use crate::problem::{Constraint, ConstraintKind, Problem, Sense};

pub const FORMAT_VERSION: u64 = 1;

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDecl {
    pub name: String,
    pub shape: [usize; 2],
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub pos: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDecl {
    pub sense: String,
    pub expr: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDecl {
    /// `leq`, `geq`, or `eq`.
    #[serde(rename = "type")]
    pub kind: String,
    pub lhs: Value,
    pub rhs: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub version: u64,
    pub variables: Vec<VariableDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, Value>,
    pub objective: ObjectiveDecl,
    #[serde(default)]
    pub constraints: Vec<ConstraintDecl>,
}

fn json_error(e: serde_json::Error) -> ParseError {
    use serde_json::error::Category;
    let kind = match e.classify() {
        Category::Data => K::Schema,
        _ => K::Syntax,
    };
    let mut err = ParseError::new(kind, strip_location(&e.to_string()));
    if e.line() > 0 {
        err.location = Some((e.line(), e.column()));
    }
    err
}

fn strip_location(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Parse document text without building the problem.
pub fn parse_document(text: &str) -> Result<ProblemDocument, ParseError> {
    let doc: ProblemDocument = serde_json::from_str(text).map_err(json_error)?;
    if doc.version != FORMAT_VERSION {
        return Err(ParseError::new(
            K::UnsupportedVersion,
            format!("unsupported format version {} (expected {FORMAT_VERSION})", doc.version),
        ));
    }
    Ok(doc)
}

/// Parse document text into a problem. Variables keep their declaration
/// order and constraint ids are assigned in document order.
pub fn parse_problem_file(text: &str) -> Result<Problem, ParseError> {
    parse_document(text)?.to_problem()
}

/// Serialize a problem as pretty-printed document text.
pub fn serialize_problem(problem: &Problem) -> String {
    let doc = ProblemDocument::from_problem(problem);
    serde_json::to_string_pretty(&doc).expect("documents always serialize")
}

struct Scope {
    variables: HashMap<String, Expression>,
    constants: HashMap<String, DMatrix<f64>>,
}

impl ProblemDocument {
    pub fn to_problem(&self) -> Result<Problem, ParseError> {
        let mut declared = Vec::new();
        let mut scope = Scope {
            variables: HashMap::new(),
            constants: HashMap::new(),
        };
        for (k, v) in self.variables.iter().enumerate() {
            let ctx = format!("variables[{k}]");
            if !v.pos {
                return Err(ParseError::new(K::NonpositiveVariable, "all variables must be positive").in_context(&ctx));
            }
            if scope.variables.contains_key(&v.name) {
                return Err(
                    ParseError::new(K::DuplicateVariable, format!("variable `{}` is declared twice", v.name))
                        .in_context(&ctx),
                );
            }
            let shape = Shape::new(v.shape[0], v.shape[1])
                .map_err(|e| ParseError::new(K::Schema, e.to_string()).in_context(&ctx))?;
            let e = variable(&v.name, shape).map_err(|e| ParseError::new(K::Schema, e.to_string()).in_context(&ctx))?;
            scope.variables.insert(v.name.clone(), e);
            declared.push((v.name.clone(), shape));
        }
        for (name, value) in &self.constants {
            let ctx = format!("constants.{name}");
            let m = matrix_literal(value).map_err(|e| e.in_context(&ctx))?;
            check_positive(&m).map_err(|e| e.in_context(&ctx))?;
            scope.constants.insert(name.clone(), m);
        }

        let sense = match self.objective.sense.as_str() {
            "minimize" => Sense::Minimize,
            "maximize" => Sense::Maximize,
            other => {
                return Err(ParseError::new(
                    K::Schema,
                    format!("objective sense must be \"minimize\" or \"maximize\"; found \"{other}\""),
                )
                .in_context("objective.sense"))
            }
        };
        let objective = parse_expr(&self.objective.expr, &scope).map_err(|e| e.in_context("objective.expr"))?;
        if !objective.shape().is_scalar() {
            return Err(ParseError::new(
                K::ShapeMismatch,
                format!("objective must be scalar; found shape {}", objective.shape()),
            )
            .in_context("objective.expr"));
        }

        let mut constraints = Vec::new();
        for (k, c) in self.constraints.iter().enumerate() {
            let ctx = format!("constraints[{k}]");
            let lhs = parse_expr(&c.lhs, &scope).map_err(|e| e.in_context(&format!("{ctx}.lhs")))?;
            let rhs = parse_expr(&c.rhs, &scope).map_err(|e| e.in_context(&format!("{ctx}.rhs")))?;
            let built = match c.kind.as_str() {
                "leq" => Constraint::less_eq(lhs, rhs),
                "geq" => Constraint::less_eq(rhs, lhs),
                "eq" => Constraint::equal(lhs, rhs),
                other => {
                    return Err(ParseError::new(
                        K::Schema,
                        format!("constraint type must be \"leq\", \"geq\", or \"eq\"; found \"{other}\""),
                    )
                    .in_context(&ctx))
                }
            };
            constraints.push(built.map_err(|e| ParseError::new(K::ShapeMismatch, e.to_string()).in_context(&ctx))?);
        }
        Problem::with_declared(sense, objective, constraints, &declared)
            .map_err(|e| ParseError::new(K::ShapeMismatch, e.to_string()))
    }

    /// Document for a problem, with every constant inlined.
    pub fn from_problem(problem: &Problem) -> ProblemDocument {
        ProblemDocument {
            version: FORMAT_VERSION,
            variables: problem
                .variables()
                .iter()
                .map(|(name, s)| VariableDecl {
                    name: name.clone(),
                    shape: [s.rows, s.cols],
                    pos: true,
                })
                .collect(),
            constants: BTreeMap::new(),
            objective: ObjectiveDecl {
                sense: problem.sense.to_string(),
                expr: expr_to_json(&problem.objective),
            },
            constraints: problem
                .constraints
                .iter()
                .map(|c| ConstraintDecl {
                    kind: match c.kind {
                        ConstraintKind::LessEq => "leq".into(),
                        ConstraintKind::Eq => "eq".into(),
                    },
                    lhs: expr_to_json(&c.lhs),
                    rhs: expr_to_json(&c.rhs),
                })
                .collect(),
        }
    }
}

fn schema(msg: impl Into<String>) -> ParseError {
    ParseError::new(K::Schema, msg)
}

fn number(v: &Value, what: &str) -> Result<f64, ParseError> {
    v.as_f64()
        .ok_or_else(|| ParseError::new(K::BadParameter, format!("{what} must be a number; found {v}")))
}

fn check_positive(m: &DMatrix<f64>) -> Result<(), ParseError> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if !(v > 0.0 && v.is_finite()) {
                return Err(ParseError::new(
                    K::NonpositiveConstant,
                    format!("constants must be positive; entry ({i}, {j}) is {v}"),
                ));
            }
        }
    }
    Ok(())
}

/// A number, a flat array (column vector), or an array of rows.
fn matrix_literal(v: &Value) -> Result<DMatrix<f64>, ParseError> {
    if let Some(x) = v.as_f64() {
        return Ok(DMatrix::from_element(1, 1, x));
    }
    let rows = v.as_array().ok_or_else(|| schema(format!("expected a number or array; found {v}")))?;
    if rows.is_empty() {
        return Err(schema("constant arrays must be nonempty"));
    }
    if rows.iter().all(Value::is_number) {
        let data: Vec<f64> = rows.iter().map(|x| x.as_f64().unwrap()).collect();
        return Ok(DMatrix::from_column_slice(data.len(), 1, &data));
    }
    let mut data = Vec::new();
    let mut cols = None;
    for r in rows {
        let r = r.as_array().ok_or_else(|| schema("matrix rows must be arrays of numbers"))?;
        if *cols.get_or_insert(r.len()) != r.len() || r.is_empty() {
            return Err(ParseError::new(K::ShapeMismatch, "matrix rows must be nonempty and of equal length"));
        }
        for x in r {
            data.push(x.as_f64().ok_or_else(|| schema(format!("matrix entries must be numbers; found {x}")))?);
        }
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols.unwrap(), &data))
}

fn build(atom: Atom, args: Vec<Expression>) -> Result<Expression, ParseError> {
    apply(atom, args).map_err(|e| ParseError::new(K::ShapeMismatch, e.to_string()))
}

fn parse_expr(v: &Value, scope: &Scope) -> Result<Expression, ParseError> {
    let items = v
        .as_array()
        .ok_or_else(|| schema(format!("expressions are arrays like [\"var\", \"x\"]; found {v}")))?;
    let (head, rest) = items
        .split_first()
        .ok_or_else(|| schema("expression arrays must be nonempty"))?;
    let head = head
        .as_str()
        .ok_or_else(|| schema(format!("expression head must be a string; found {head}")))?;
    match head {
        "var" => {
            let [name] = rest else {
                return Err(schema("[\"var\", name] takes exactly one name"));
            };
            let name = name.as_str().ok_or_else(|| schema("variable names must be strings"))?;
            scope
                .variables
                .get(name)
                .cloned()
                .ok_or_else(|| ParseError::new(K::UnknownVariable, format!("variable `{name}` is not declared")))
        }
        "const" => {
            let [value] = rest else {
                return Err(schema("[\"const\", value] takes exactly one value"));
            };
            let m = match value.as_str() {
                Some(name) => scope
                    .constants
                    .get(name)
                    .cloned()
                    .ok_or_else(|| ParseError::new(K::UnknownConstant, format!("constant `{name}` is not defined")))?,
                None => matrix_literal(value)?,
            };
            check_positive(&m)?;
            constant(m).map_err(|e| ParseError::new(K::NonpositiveConstant, e.to_string()))
        }
        name => {
            let desc = atom_info(name).map_err(|e| match e {
                Error::UnknownAtom { .. } => ParseError::new(K::UnknownAtom, e.to_string()),
                other => ParseError::new(K::Schema, other.to_string()),
            })?;
            let k = desc.parameters.len();
            let trailing = matches!(name, "index" | "slice");
            if k > 0 && rest.len() < k + 1 {
                return Err(ParseError::new(
                    K::BadParameter,
                    format!("`{name}` takes parameters [{}] and one argument", desc.parameters.join(", ")),
                ));
            }
            let (params, args) = if trailing {
                let (a, p) = rest.split_at(rest.len() - k);
                (p, a)
            } else {
                rest.split_at(k)
            };
            let params = params
                .iter()
                .zip(desc.parameters)
                .map(|(p, pname)| number(p, &format!("parameter `{pname}` of `{name}`")))
                .collect::<Result<Vec<_>, _>>()?;
            let atom = desc
                .instantiate(&params)
                .map_err(|e| ParseError::new(K::BadParameter, e.to_string()))?;
            let args = args.iter().map(|a| parse_expr(a, scope)).collect::<Result<Vec<_>, _>>()?;
            build(atom, args)
        }
    }
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    if m.nrows() == 1 && m.ncols() == 1 {
        json!(m[(0, 0)])
    } else {
        Value::Array(
            (0..m.nrows())
                .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
                .collect(),
        )
    }
}

/// Prefix-array form of an expression.
pub fn expr_to_json(e: &Expression) -> Value {
    match e.kind() {
        ExprKind::Variable { name } => json!(["var", name]),
        ExprKind::Constant(m) => json!(["const", matrix_json(m)]),
        ExprKind::Atom { atom, args } => {
            let mut out = vec![json!(atom.name())];
            let params: Vec<Value> = match atom {
                Atom::SumLargest(r) => vec![json!(r)],
                Atom::Index { row, col } => vec![json!(row), json!(col)],
                Atom::Slice { rows, cols } => vec![json!(rows.0), json!(rows.1), json!(cols.0), json!(cols.1)],
                other => other.params().into_iter().map(|p| json!(p)).collect(),
            };
            let children = args.iter().map(expr_to_json);
            if matches!(atom, Atom::Index { .. } | Atom::Slice { .. }) {
                out.extend(children);
                out.extend(params);
            } else {
                out.extend(params);
                out.extend(children);
            }
            Value::Array(out)
        }
    }
}
