//! The atom library: every function the modeling layer knows about, with its
//! log-log curvature, per-argument monotonicity, shape rule, domain, and
//! numeric evaluator.
//!
//! Parameterized atoms (`pow`, `sum_largest`, `pnorm`, `resolvent`, `index`,
//! `slice`) carry their parameters as static data rather than as children,
//! since curvature and monotonicity may depend on them.

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{DomainError, Error, Result};
use crate::expr::Shape;

/// Log-log curvature. Ordered as a lattice:
/// `Constant ⊑ Affine ⊑ {Convex, Concave} ⊑ Unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Constant,
    Affine,
    Convex,
    Concave,
    Unknown,
}

impl Curvature {
    fn rank(self) -> u8 {
        match self {
            Curvature::Constant => 0,
            Curvature::Affine => 1,
            Curvature::Convex | Curvature::Concave => 2,
            Curvature::Unknown => 3,
        }
    }

    /// Lattice order `self ⊑ other`.
    pub fn le(self, other: Curvature) -> bool {
        if self == other {
            return true;
        }
        match (self, other) {
            (Curvature::Convex, Curvature::Concave) | (Curvature::Concave, Curvature::Convex) => false,
            _ => self.rank() < other.rank(),
        }
    }

    /// Least upper bound.
    pub fn join(self, other: Curvature) -> Curvature {
        if self.le(other) {
            other
        } else if other.le(self) {
            self
        } else {
            Curvature::Unknown
        }
    }

    /// Greatest lower bound.
    pub fn meet(self, other: Curvature) -> Curvature {
        if self.le(other) {
            self
        } else if other.le(self) {
            other
        } else {
            Curvature::Affine
        }
    }

    pub fn is_convex(self) -> bool {
        self.le(Curvature::Convex)
    }

    pub fn is_concave(self) -> bool {
        self.le(Curvature::Concave)
    }

    pub fn is_affine(self) -> bool {
        self.le(Curvature::Affine)
    }

    pub fn describe(self) -> &'static str {
        match self {
            Curvature::Constant => "log-log constant",
            Curvature::Affine => "log-log affine",
            Curvature::Convex => "log-log convex",
            Curvature::Concave => "log-log concave",
            Curvature::Unknown => "unknown curvature",
        }
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotonicity {
    Nondecreasing,
    Nonincreasing,
    Neither,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Nondecreasing => "nondecreasing",
            Monotonicity::Nonincreasing => "nonincreasing",
            Monotonicity::Neither => "non-monotone",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
}

impl Arity {
    fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
        }
    }
}

impl fmt::Display for Arity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arity::Exactly(1) => write!(f, "1 argument"),
            Arity::Exactly(k) => write!(f, "{k} arguments"),
            Arity::AtLeast(k) => write!(f, "at least {k} arguments"),
        }
    }
}

/// How an atom's monotonicity is declared in the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicitySpec {
    /// Same monotonicity in every argument.
    All(Monotonicity),
    PerArgument(&'static [Monotonicity]),
    /// Nondecreasing for a nonnegative exponent, nonincreasing otherwise.
    SignOfExponent,
}

/// Registry record for one atom family.
#[derive(Debug, Clone, Serialize)]
pub struct AtomDescriptor {
    pub name: &'static str,
    pub signature: &'static str,
    pub arity: Arity,
    pub curvature: Curvature,
    pub monotonicity: MonotonicitySpec,
    /// Names of static parameters, in document order.
    pub parameters: &'static [&'static str],
    pub domain: &'static str,
}

impl AtomDescriptor {
    /// Build a concrete atom of this family from its parameters.
    pub fn instantiate(&self, params: &[f64]) -> Result<Atom> {
        Atom::from_name(self.name, params)
    }

    /// Monotonicity in argument `arg` for a parameter-free reading of the
    /// family; `pow` reports the nonnegative-exponent case.
    pub fn monotonicity_of(&self, arg: usize) -> Monotonicity {
        match self.monotonicity {
            MonotonicitySpec::All(m) => m,
            MonotonicitySpec::PerArgument(ms) => ms[arg.min(ms.len() - 1)],
            MonotonicitySpec::SignOfExponent => Monotonicity::Nondecreasing,
        }
    }
}

use Monotonicity::{Neither, Nondecreasing, Nonincreasing};

const INC_DEC: &[Monotonicity] = &[Nondecreasing, Nonincreasing];

static REGISTRY: &[AtomDescriptor] = &[
    AtomDescriptor {
        name: "add",
        signature: "add(x1, x2, ...): elementwise sum with scalar broadcasting",
        arity: Arity::AtLeast(2),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "mul",
        signature: "mul(x, y): elementwise product with scalar broadcasting",
        arity: Arity::Exactly(2),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "div",
        signature: "div(x, y): elementwise ratio with scalar broadcasting",
        arity: Arity::Exactly(2),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::PerArgument(INC_DEC),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "pow",
        signature: "pow[a](x): elementwise power with real exponent a",
        arity: Arity::Exactly(1),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::SignOfExponent,
        parameters: &["a"],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "max",
        signature: "max(x): largest entry; max(x1, x2, ...): elementwise maximum",
        arity: Arity::AtLeast(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "min",
        signature: "min(x): smallest entry; min(x1, x2, ...): elementwise minimum",
        arity: Arity::AtLeast(1),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "sum_largest",
        signature: "sum_largest[r](x): sum of the r largest entries",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &["r"],
        domain: "positive arrays with at least r entries",
    },
    AtomDescriptor {
        name: "one_minus",
        signature: "one_minus(x): elementwise 1 - x",
        arity: Arity::Exactly(1),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::All(Nonincreasing),
        parameters: &[],
        domain: "entries in (0, 1)",
    },
    AtomDescriptor {
        name: "diff_pos",
        signature: "diff_pos(x, y): elementwise x - y",
        arity: Arity::Exactly(2),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::PerArgument(INC_DEC),
        parameters: &[],
        domain: "x > y > 0 elementwise",
    },
    AtomDescriptor {
        name: "geo_mean",
        signature: "geo_mean(x): geometric mean of the entries",
        arity: Arity::Exactly(1),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "harmonic_mean",
        signature: "harmonic_mean(x): n / sum(1 / x_i)",
        arity: Arity::Exactly(1),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "pnorm",
        signature: "pnorm[p](x): (sum x_i^p)^(1/p), p >= 1",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &["p"],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "exp",
        signature: "exp(x): elementwise e^x",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "log",
        signature: "log(x): elementwise natural logarithm",
        arity: Arity::Exactly(1),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "entries in (1, inf)",
    },
    AtomDescriptor {
        name: "entropy",
        signature: "entropy(x): elementwise -x log x",
        arity: Arity::Exactly(1),
        curvature: Curvature::Concave,
        monotonicity: MonotonicitySpec::All(Neither),
        parameters: &[],
        domain: "entries in (0, 1)",
    },
    AtomDescriptor {
        name: "trace",
        signature: "trace(X): sum of the diagonal of a square matrix",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive square matrices",
    },
    AtomDescriptor {
        name: "matmul",
        signature: "matmul(A, B): matrix product",
        arity: Arity::Exactly(2),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive matrices with matching inner dimension",
    },
    AtomDescriptor {
        name: "pf_eigenvalue",
        signature: "pf_eigenvalue(X): Perron-Frobenius eigenvalue (spectral radius)",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive square matrices",
    },
    AtomDescriptor {
        name: "eye_minus_inv",
        signature: "eye_minus_inv(X): (I - X)^-1",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive square matrices with spectral radius < 1",
    },
    AtomDescriptor {
        name: "resolvent",
        signature: "resolvent[s](X): (sI - X)^-1",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &["s"],
        domain: "positive square matrices with spectral radius < s",
    },
    AtomDescriptor {
        name: "sum",
        signature: "sum(X): sum of all entries",
        arity: Arity::Exactly(1),
        curvature: Curvature::Convex,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "index",
        signature: "index[row, col](X): a single entry",
        arity: Arity::Exactly(1),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &["row", "col"],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "slice",
        signature: "slice[r0, r1, c0, c1](X): rows r0..r1 and columns c0..c1 (half open)",
        arity: Arity::Exactly(1),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &["r0", "r1", "c0", "c1"],
        domain: "positive arrays",
    },
    AtomDescriptor {
        name: "vstack",
        signature: "vstack(x1, x2, ...): vertical concatenation",
        arity: Arity::AtLeast(1),
        curvature: Curvature::Affine,
        monotonicity: MonotonicitySpec::All(Nondecreasing),
        parameters: &[],
        domain: "positive arrays with equal column counts",
    },
];

/// All registered atoms in a fixed order.
pub fn list_atoms() -> &'static [AtomDescriptor] {
    REGISTRY
}

/// Look up an atom family by name.
pub fn atom_info(name: &str) -> Result<&'static AtomDescriptor> {
    REGISTRY
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| unknown_atom(name))
}

fn unknown_atom(name: &str) -> Error {
    let mut scored: Vec<(f64, &str)> = REGISTRY
        .iter()
        .map(|d| (strsim::jaro_winkler(name, d.name), d.name))
        .filter(|(score, _)| *score >= 0.75)
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    Error::UnknownAtom {
        name: name.to_string(),
        suggestions: scored.into_iter().take(3).map(|(_, n)| n.to_string()).collect(),
    }
}

/// Evaluate an atom by name on numeric arguments.
pub fn eval_atom(name: &str, params: &[f64], args: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let atom = Atom::from_name(name, params)?;
    let shapes: Vec<Shape> = args.iter().map(Shape::of).collect();
    atom.output_shape(&shapes)?;
    Ok(atom.eval(args)?)
}

/// A concrete atom: a registry entry together with its static parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    Add,
    Mul,
    Div,
    Pow(f64),
    Max,
    Min,
    SumLargest(usize),
    OneMinus,
    DiffPos,
    GeoMean,
    HarmonicMean,
    PNorm(f64),
    Exp,
    Log,
    Entropy,
    Trace,
    MatMul,
    PfEigenvalue,
    EyeMinusInv,
    Resolvent(f64),
    Sum,
    Index { row: usize, col: usize },
    Slice { rows: (usize, usize), cols: (usize, usize) },
    VStack,
}

fn as_index(atom: &str, name: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Signature {
            atom: atom.to_string(),
            expected: format!("nonnegative integer parameter `{name}`"),
            found: format!("{v}"),
        })
    }
}

impl Atom {
    pub fn from_name(name: &str, params: &[f64]) -> Result<Atom> {
        let desc = atom_info(name)?;
        if params.len() != desc.parameters.len() {
            return Err(Error::Signature {
                atom: name.to_string(),
                expected: format!("{} parameter(s) [{}]", desc.parameters.len(), desc.parameters.join(", ")),
                found: format!("{} parameter(s)", params.len()),
            });
        }
        let bad = |expected: &str, v: f64| Error::Signature {
            atom: name.to_string(),
            expected: expected.to_string(),
            found: format!("{v}"),
        };
        let atom = match name {
            "add" => Atom::Add,
            "mul" => Atom::Mul,
            "div" => Atom::Div,
            "pow" => {
                if !params[0].is_finite() {
                    return Err(bad("a finite exponent", params[0]));
                }
                Atom::Pow(params[0])
            }
            "max" => Atom::Max,
            "min" => Atom::Min,
            "sum_largest" => {
                let r = as_index(name, "r", params[0])?;
                if r == 0 {
                    return Err(bad("r >= 1", params[0]));
                }
                Atom::SumLargest(r)
            }
            "one_minus" => Atom::OneMinus,
            "diff_pos" => Atom::DiffPos,
            "geo_mean" => Atom::GeoMean,
            "harmonic_mean" => Atom::HarmonicMean,
            "pnorm" => {
                if !(params[0].is_finite() && params[0] >= 1.0) {
                    return Err(bad("a finite norm order p >= 1", params[0]));
                }
                Atom::PNorm(params[0])
            }
            "exp" => Atom::Exp,
            "log" => Atom::Log,
            "entropy" => Atom::Entropy,
            "trace" => Atom::Trace,
            "matmul" => Atom::MatMul,
            "pf_eigenvalue" => Atom::PfEigenvalue,
            "eye_minus_inv" => Atom::EyeMinusInv,
            "resolvent" => {
                if !(params[0].is_finite() && params[0] > 0.0) {
                    return Err(bad("a finite scalar s > 0", params[0]));
                }
                Atom::Resolvent(params[0])
            }
            "sum" => Atom::Sum,
            "index" => Atom::Index {
                row: as_index(name, "row", params[0])?,
                col: as_index(name, "col", params[1])?,
            },
            "slice" => Atom::Slice {
                rows: (as_index(name, "r0", params[0])?, as_index(name, "r1", params[1])?),
                cols: (as_index(name, "c0", params[2])?, as_index(name, "c1", params[3])?),
            },
            "vstack" => Atom::VStack,
            _ => return Err(Error::Internal(format!("registry entry `{name}` has no constructor"))),
        };
        Ok(atom)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Atom::Add => "add",
            Atom::Mul => "mul",
            Atom::Div => "div",
            Atom::Pow(_) => "pow",
            Atom::Max => "max",
            Atom::Min => "min",
            Atom::SumLargest(_) => "sum_largest",
            Atom::OneMinus => "one_minus",
            Atom::DiffPos => "diff_pos",
            Atom::GeoMean => "geo_mean",
            Atom::HarmonicMean => "harmonic_mean",
            Atom::PNorm(_) => "pnorm",
            Atom::Exp => "exp",
            Atom::Log => "log",
            Atom::Entropy => "entropy",
            Atom::Trace => "trace",
            Atom::MatMul => "matmul",
            Atom::PfEigenvalue => "pf_eigenvalue",
            Atom::EyeMinusInv => "eye_minus_inv",
            Atom::Resolvent(_) => "resolvent",
            Atom::Sum => "sum",
            Atom::Index { .. } => "index",
            Atom::Slice { .. } => "slice",
            Atom::VStack => "vstack",
        }
    }

    /// Static parameters in registry order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Atom::Pow(a) => vec![a],
            Atom::SumLargest(r) => vec![r as f64],
            Atom::PNorm(p) => vec![p],
            Atom::Resolvent(s) => vec![s],
            Atom::Index { row, col } => vec![row as f64, col as f64],
            Atom::Slice { rows, cols } => vec![rows.0 as f64, rows.1 as f64, cols.0 as f64, cols.1 as f64],
            _ => Vec::new(),
        }
    }

    pub fn descriptor(&self) -> &'static AtomDescriptor {
        REGISTRY
            .iter()
            .find(|d| d.name == self.name())
            .expect("every atom variant is registered")
    }

    pub fn curvature(&self) -> Curvature {
        self.descriptor().curvature
    }

    pub fn monotonicity(&self, arg: usize) -> Monotonicity {
        match *self {
            Atom::Pow(a) if a < 0.0 => Nonincreasing,
            _ => self.descriptor().monotonicity_of(arg),
        }
    }

    /// Label used in diagnostics, e.g. `pow[2]`.
    pub fn label(&self) -> String {
        let params = self.params();
        if params.is_empty() {
            self.name().to_string()
        } else {
            let ps: Vec<String> = params.iter().map(|p| format!("{p}")).collect();
            format!("{}[{}]", self.name(), ps.join(", "))
        }
    }

    fn signature_error(&self, found: &[Shape]) -> Error {
        let shapes: Vec<String> = found.iter().map(|s| s.to_string()).collect();
        Error::Signature {
            atom: self.label(),
            expected: self.descriptor().signature.to_string(),
            found: format!("arguments of shape ({})", shapes.join(", ")),
        }
    }

    /// Output shape for the given argument shapes, or an error naming the
    /// atom and its expected signature.
    pub fn output_shape(&self, shapes: &[Shape]) -> Result<Shape> {
        let desc = self.descriptor();
        if !desc.arity.accepts(shapes.len()) {
            return Err(Error::Signature {
                atom: self.label(),
                expected: format!("{} ({})", desc.arity, desc.signature),
                found: format!("{} argument(s)", shapes.len()),
            });
        }
        let shape = match self {
            Atom::Add | Atom::Mul | Atom::Div | Atom::DiffPos => broadcast(shapes),
            Atom::Max | Atom::Min => {
                if shapes.len() == 1 {
                    Some(Shape::scalar())
                } else {
                    broadcast(shapes)
                }
            }
            Atom::Pow(_) | Atom::OneMinus | Atom::Exp | Atom::Log | Atom::Entropy => Some(shapes[0]),
            Atom::SumLargest(r) => (*r <= shapes[0].numel()).then(Shape::scalar),
            Atom::GeoMean | Atom::HarmonicMean | Atom::PNorm(_) | Atom::Sum => Some(Shape::scalar()),
            Atom::Trace | Atom::PfEigenvalue => shapes[0].is_square().then(Shape::scalar),
            Atom::EyeMinusInv | Atom::Resolvent(_) => shapes[0].is_square().then_some(shapes[0]),
            Atom::MatMul => (shapes[0].cols == shapes[1].rows).then(|| Shape {
                rows: shapes[0].rows,
                cols: shapes[1].cols,
            }),
            Atom::Index { row, col } => (*row < shapes[0].rows && *col < shapes[0].cols).then(Shape::scalar),
            Atom::Slice { rows, cols } => {
                let ok = rows.0 < rows.1 && rows.1 <= shapes[0].rows && cols.0 < cols.1 && cols.1 <= shapes[0].cols;
                ok.then(|| Shape {
                    rows: rows.1 - rows.0,
                    cols: cols.1 - cols.0,
                })
            }
            Atom::VStack => {
                let cols = shapes[0].cols;
                shapes.iter().all(|s| s.cols == cols).then(|| Shape {
                    rows: shapes.iter().map(|s| s.rows).sum(),
                    cols,
                })
            }
        };
        shape.ok_or_else(|| self.signature_error(shapes))
    }

    /// Numeric value of the atom. Arguments must already satisfy the shape
    /// contract; values outside the domain yield a `DomainError`.
    pub fn eval(&self, args: &[DMatrix<f64>]) -> Result<DMatrix<f64>, DomainError> {
        let name = self.name();
        for (k, a) in args.iter().enumerate() {
            if let Some((i, j)) = first_entry(a, |v| !(v > 0.0 && v.is_finite())) {
                return Err(DomainError::for_atom(
                    name,
                    k,
                    (i, j),
                    format!("argument entries must be positive and finite; found {}", a[(i, j)]),
                ));
            }
        }
        let out = match self {
            Atom::Add => elementwise(args, |xs| xs.iter().sum()),
            Atom::Mul => elementwise(args, |xs| xs[0] * xs[1]),
            Atom::Div => elementwise(args, |xs| xs[0] / xs[1]),
            Atom::Pow(a) => args[0].map(|x| x.powf(*a)),
            Atom::Max if args.len() == 1 => scalar(args[0].max()),
            Atom::Min if args.len() == 1 => scalar(args[0].min()),
            Atom::Max => elementwise(args, |xs| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            Atom::Min => elementwise(args, |xs| xs.iter().copied().fold(f64::INFINITY, f64::min)),
            Atom::SumLargest(r) => {
                let mut v: Vec<f64> = args[0].iter().copied().collect();
                v.sort_by(|a, b| b.total_cmp(a));
                scalar(v.iter().take(*r).sum())
            }
            Atom::OneMinus => {
                check_entries(name, 0, &args[0], |x| x < 1.0, "requires entries in (0, 1)")?;
                args[0].map(|x| 1.0 - x)
            }
            Atom::DiffPos => {
                let out = elementwise(args, |xs| xs[0] - xs[1]);
                check_entries(name, 0, &out, |d| d > 0.0, "requires x > y elementwise")?;
                out
            }
            Atom::GeoMean => {
                let n = args[0].len() as f64;
                scalar((args[0].iter().map(|x| x.ln()).sum::<f64>() / n).exp())
            }
            Atom::HarmonicMean => {
                let n = args[0].len() as f64;
                scalar(n / args[0].iter().map(|x| 1.0 / x).sum::<f64>())
            }
            Atom::PNorm(p) => {
                let m = args[0].max();
                let s: f64 = args[0].iter().map(|x| (x / m).powf(*p)).sum();
                scalar(m * s.powf(1.0 / p))
            }
            Atom::Exp => args[0].map(f64::exp),
            Atom::Log => {
                check_entries(name, 0, &args[0], |x| x > 1.0, "requires entries in (1, inf)")?;
                args[0].map(f64::ln)
            }
            Atom::Entropy => {
                check_entries(name, 0, &args[0], |x| x < 1.0, "requires entries in (0, 1)")?;
                args[0].map(|x| -x * x.ln())
            }
            Atom::Trace => scalar(args[0].trace()),
            Atom::MatMul => &args[0] * &args[1],
            Atom::PfEigenvalue => scalar(perron_root(&args[0])),
            Atom::EyeMinusInv => shifted_inverse(name, &args[0], 1.0)?,
            Atom::Resolvent(s) => shifted_inverse(name, &args[0], *s)?,
            Atom::Sum => scalar(args[0].sum()),
            Atom::Index { row, col } => scalar(args[0][(*row, *col)]),
            Atom::Slice { rows, cols } => args[0]
                .view((rows.0, cols.0), (rows.1 - rows.0, cols.1 - cols.0))
                .into_owned(),
            Atom::VStack => {
                let cols = args[0].ncols();
                let rows: usize = args.iter().map(|a| a.nrows()).sum();
                let mut out = DMatrix::zeros(rows, cols);
                let mut r0 = 0;
                for a in args {
                    out.view_mut((r0, 0), (a.nrows(), cols)).copy_from(a);
                    r0 += a.nrows();
                }
                out
            }
        };
        if let Some((i, j)) = first_entry(&out, |v| !(v > 0.0 && v.is_finite())) {
            return Err(DomainError::for_atom(
                name,
                0,
                (i, j),
                format!("result entry is not positive and finite ({})", out[(i, j)]),
            ));
        }
        Ok(out)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Common shape of arguments where 1×1 arguments broadcast.
pub(crate) fn broadcast(shapes: &[Shape]) -> Option<Shape> {
    let mut out = Shape::scalar();
    for s in shapes {
        if s.is_scalar() {
            continue;
        }
        if out.is_scalar() {
            out = *s;
        } else if out != *s {
            return None;
        }
    }
    Some(out)
}

fn broadcast_get(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    if m.nrows() == 1 && m.ncols() == 1 {
        m[(0, 0)]
    } else {
        m[(i, j)]
    }
}

fn elementwise(args: &[DMatrix<f64>], f: impl Fn(&[f64]) -> f64) -> DMatrix<f64> {
    let shapes: Vec<Shape> = args.iter().map(Shape::of).collect();
    let shape = broadcast(&shapes).expect("shapes checked at construction");
    let mut buf = vec![0.0; args.len()];
    DMatrix::from_fn(shape.rows, shape.cols, |i, j| {
        for (b, a) in buf.iter_mut().zip(args) {
            *b = broadcast_get(a, i, j);
        }
        f(&buf)
    })
}

fn first_entry(m: &DMatrix<f64>, bad: impl Fn(f64) -> bool) -> Option<(usize, usize)> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if bad(m[(i, j)]) {
                return Some((i, j));
            }
        }
    }
    None
}

fn check_entries(
    atom: &str,
    arg: usize,
    m: &DMatrix<f64>,
    ok: impl Fn(f64) -> bool,
    what: &str,
) -> Result<(), DomainError> {
    match first_entry(m, |v| !ok(v)) {
        Some((i, j)) => Err(DomainError::for_atom(atom, arg, (i, j), format!("{what}; found {}", m[(i, j)]))),
        None => Ok(()),
    }
}

/// `(sI - X)^-1` for a positive square `X` with spectral radius below `s`.
fn shifted_inverse(atom: &str, x: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>, DomainError> {
    let rho = perron_root(x);
    if rho >= s {
        return Err(DomainError::for_atom(
            atom,
            0,
            (0, 0),
            format!("requires spectral radius < {s}; found {rho}"),
        ));
    }
    let n = x.nrows();
    let shifted = DMatrix::identity(n, n) * s - x;
    shifted
        .try_inverse()
        .ok_or_else(|| DomainError::for_atom(atom, 0, (0, 0), "matrix is numerically singular"))
}

const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITERS: usize = 10_000;

/// Perron-Frobenius eigenvalue of a positive square matrix by power
/// iteration. Stops when the Collatz-Wielandt bounds
/// `min_i (Xv)_i / v_i <= λ <= max_i (Xv)_i / v_i` agree to `1e-12` relative.
pub fn perron_root(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut v = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..PERRON_MAX_ITERS {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = (0..n).map(|j| x[(i, j)] * v[j]).sum();
        }
        lo = f64::INFINITY;
        hi = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            let r = wi / vi;
            lo = f64::min(lo, r);
            hi = f64::max(hi, r);
        }
        if hi - lo <= PERRON_TOL * hi {
            break;
        }
        let total: f64 = w.iter().sum();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / total;
        }
    }
    0.5 * (lo + hi)
}
