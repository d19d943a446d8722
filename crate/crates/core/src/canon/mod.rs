//! Log-space standard form.
//!
//! A verified problem is lowered to an [`ExpSumProgram`]: minimize a linear
//! function of `u` subject to exponential-sum inequalities
//! `Σ_k exp(a_kᵀu + b_k) + fᵀu + g <= 0` and affine equalities. Each
//! coordinate of `u` is either the log of one entry of a user variable or a
//! tagged auxiliary.

mod graph;
mod lower;
mod retrieve;

use std::fmt::{self, Write as _};
use std::ops;

use serde::Serialize;

pub use graph::{graph_eye_minus_inv, graph_pf_eigenvalue};
pub use lower::{lower, SUM_LARGEST_LIMIT};
pub use retrieve::{retrieve, ConstraintSlot, PrincipalRow, RetrievalMap, VariableSlot};

/// Sparse affine form `Σ coeff·u_index + constant`. Coefficients are kept
/// sorted by index, merged, and free of zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AffineForm {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineForm {
    pub fn constant(c: f64) -> AffineForm {
        AffineForm {
            coeffs: Vec::new(),
            constant: c,
        }
    }

    pub fn coord(index: usize) -> AffineForm {
        AffineForm {
            coeffs: vec![(index, 1.0)],
            constant: 0.0,
        }
    }

    pub fn from_terms(mut terms: Vec<(usize, f64)>, constant: f64) -> AffineForm {
        terms.sort_by_key(|(i, _)| *i);
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match coeffs.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => coeffs.push((i, c)),
            }
        }
        coeffs.retain(|(_, c)| *c != 0.0);
        AffineForm { coeffs, constant }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.coeffs.iter().map(|(i, c)| c * u[*i]).sum::<f64>() + self.constant
    }

    pub fn scale(&self, a: f64) -> AffineForm {
        if a == 0.0 {
            return AffineForm::constant(0.0);
        }
        AffineForm {
            coeffs: self.coeffs.iter().map(|(i, c)| (*i, c * a)).collect(),
            constant: self.constant * a,
        }
    }

    pub fn shift(&self, c: f64) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.clone(),
            constant: self.constant + c,
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.last().map(|(i, _)| *i)
    }
}

impl ops::Add<&AffineForm> for &AffineForm {
    type Output = AffineForm;
    fn add(self, rhs: &AffineForm) -> AffineForm {
        let terms = self.coeffs.iter().chain(&rhs.coeffs).copied().collect();
        AffineForm::from_terms(terms, self.constant + rhs.constant)
    }
}

impl ops::Sub<&AffineForm> for &AffineForm {
    type Output = AffineForm;
    fn sub(self, rhs: &AffineForm) -> AffineForm {
        self + &rhs.scale(-1.0)
    }
}

impl ops::Neg for &AffineForm {
    type Output = AffineForm;
    fn neg(self) -> AffineForm {
        self.scale(-1.0)
    }
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in &self.coeffs {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 {
                write!(f, "u{i}")?;
            } else {
                write!(f, "{mag}*u{i}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant != 0.0 {
            let (sign, mag) = if self.constant < 0.0 {
                ("-", -self.constant)
            } else {
                ("+", self.constant)
            };
            write!(f, " {sign} {mag}")
        } else {
            Ok(())
        }
    }
}

/// Which part of the user problem produced a canonical row or coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    Objective,
    /// User constraint, by position in the problem.
    Constraint(usize),
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Objective => write!(f, "objective"),
            Owner::Constraint(i) => write!(f, "constraint {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Origin {
    pub owner: Owner,
    /// Atom name for graph rows, or a description of the user relation.
    pub source: String,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.owner, self.source)
    }
}

/// `Σ_k exp(terms_k) + tail <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSumConstraint {
    pub terms: Vec<AffineForm>,
    pub tail: AffineForm,
    pub origin: Origin,
    /// Whether this row carries the dual of a user constraint entry.
    pub principal: bool,
}

impl ExpSumConstraint {
    /// Rows with no exponential terms and no coefficients are constant.
    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() && self.tail.is_constant()
    }
}

/// `form == 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityRow {
    pub form: AffineForm,
    pub origin: Origin,
    pub principal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coordinate {
    /// `log` of entry `(row, col)` of a user variable.
    Variable { name: String, row: usize, col: usize },
    Auxiliary { tag: String, owner: Owner },
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coordinate::Variable { name, row, col } => write!(f, "log {name}[{row},{col}]"),
            Coordinate::Auxiliary { tag, owner } => write!(f, "aux {tag} ({owner})"),
        }
    }
}

/// Canonical log-space program: minimize `objective` (an affine form whose
/// constant is the logged-data offset) subject to the inequalities and
/// equalities.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExpSumProgram {
    pub coords: Vec<Coordinate>,
    pub objective: AffineForm,
    pub inequalities: Vec<ExpSumConstraint>,
    pub equalities: Vec<EqualityRow>,
}

impl ExpSumProgram {
    pub fn num_coords(&self) -> usize {
        self.coords.len()
    }

    /// Deterministic text listing of coordinates, objective, and rows.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "coordinates ({}):", self.coords.len());
        for (i, c) in self.coords.iter().enumerate() {
            let _ = writeln!(out, "  u{i}: {c}");
        }
        let _ = writeln!(out, "objective:");
        let _ = writeln!(out, "  minimize {}", self.objective);
        let _ = writeln!(out, "inequalities ({}):", self.inequalities.len());
        for (i, h) in self.inequalities.iter().enumerate() {
            let mut row = String::new();
            for (k, t) in h.terms.iter().enumerate() {
                if k > 0 {
                    row.push_str(" + ");
                }
                let _ = write!(row, "exp({t})");
            }
            if !(h.tail.is_constant() && h.tail.constant == 0.0) || h.terms.is_empty() {
                if !h.terms.is_empty() {
                    row.push_str(" + ");
                }
                let _ = write!(row, "({})", h.tail);
            }
            let flag = if h.principal { " principal" } else { "" };
            let _ = writeln!(out, "  h{i} [{}{flag}]: {row} <= 0", h.origin);
        }
        let _ = writeln!(out, "equalities ({}):", self.equalities.len());
        for (i, e) in self.equalities.iter().enumerate() {
            let flag = if e.principal { " principal" } else { "" };
            let _ = writeln!(out, "  e{i} [{}{flag}]: {} = 0", e.origin, e.form);
        }
        out
    }
}

/// Incremental construction of an [`ExpSumProgram`]. Rows and auxiliaries
/// are attributed to the current owner.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    program: ExpSumProgram,
    owner: Option<Owner>,
}

impl ProgramBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_owner(&mut self, owner: Owner) {
        self.owner = Some(owner);
    }

    fn owner(&self) -> Owner {
        self.owner.unwrap_or(Owner::Objective)
    }

    pub fn variable_coord(&mut self, name: &str, row: usize, col: usize) -> usize {
        self.program.coords.push(Coordinate::Variable {
            name: name.to_string(),
            row,
            col,
        });
        self.program.coords.len() - 1
    }

    /// A fresh auxiliary coordinate, returned as a form.
    pub fn aux(&mut self, tag: impl Into<String>) -> AffineForm {
        self.program.coords.push(Coordinate::Auxiliary {
            tag: tag.into(),
            owner: self.owner(),
        });
        AffineForm::coord(self.program.coords.len() - 1)
    }

    pub fn push_inequality(&mut self, terms: Vec<AffineForm>, tail: AffineForm, source: impl Into<String>) -> usize {
        self.program.inequalities.push(ExpSumConstraint {
            terms,
            tail,
            origin: Origin {
                owner: self.owner(),
                source: source.into(),
            },
            principal: false,
        });
        self.program.inequalities.len() - 1
    }

    pub fn push_equality(&mut self, form: AffineForm, source: impl Into<String>) -> usize {
        self.program.equalities.push(EqualityRow {
            form,
            origin: Origin {
                owner: self.owner(),
                source: source.into(),
            },
            principal: false,
        });
        self.program.equalities.len() - 1
    }

    pub fn mark_principal_inequality(&mut self, index: usize) {
        self.program.inequalities[index].principal = true;
    }

    pub fn mark_principal_equality(&mut self, index: usize) {
        self.program.equalities[index].principal = true;
    }

    pub fn set_objective(&mut self, objective: AffineForm) {
        self.program.objective = objective;
    }

    pub fn program(&self) -> &ExpSumProgram {
        &self.program
    }

    pub fn finish(self) -> ExpSumProgram {
        self.program
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_forms_merge_and_drop_zeros() {
        let a = AffineForm::from_terms(vec![(2, 1.0), (0, 3.0), (2, -1.0)], 0.5);
        assert_eq!(a.coeffs, vec![(0, 3.0)]);
        let b = &AffineForm::coord(0) - &AffineForm::coord(0);
        assert!(b.is_constant());
        let c = &AffineForm::coord(1).scale(2.0) + &AffineForm::constant(1.0);
        assert_eq!(c.eval(&[0.0, 3.0]), 7.0);
        assert_eq!(format!("{}", &c - &AffineForm::coord(0)), "-u0 + 2*u1 + 1");
    }

    #[test]
    fn dump_is_deterministic() {
        let mut b = ProgramBuilder::new();
        let x = b.variable_coord("x", 0, 0);
        b.set_owner(Owner::Constraint(0));
        let i = b.push_inequality(vec![AffineForm::coord(x)], AffineForm::constant(-1.0), "leq (0, 0)");
        b.mark_principal_inequality(i);
        b.set_objective(AffineForm::coord(x));
        let p = b.finish();
        let dump = p.dump();
        assert!(dump.contains("u0: log x[0,0]"));
        assert!(dump.contains("h0 [constraint 0: leq (0, 0) principal]: exp(u0) + (-1) <= 0"), "{dump}");
        assert_eq!(dump, p.clone().dump());
    }
}
