use std::fmt;

use thiserror::Error;

use crate::dgp::DgpReport;

/// Errors produced while building, analyzing, lowering, or solving problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid construction: {0}")]
    Construction(String),

    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error("unknown atom `{name}`{}", suggestion_suffix(.suggestions))]
    UnknownAtom {
        name: String,
        suggestions: Vec<String>,
    },

    #[error("atom `{atom}` expects {expected}; got {found}")]
    Signature {
        atom: String,
        expected: String,
        found: String,
    },

    #[error("problem is not DGP: {}", .0.summary())]
    NotDgp(Box<DgpReport>),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("sum_largest expansion too large: C({n}, {r}) exceeds {limit} subsets")]
    ExpansionTooLarge { n: usize, r: usize, limit: usize },

    #[error("invalid solver settings: {0}")]
    Settings(String),

    #[error("internal consistency error: {0}")]
    Internal(String),
}

fn suggestion_suffix(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!(" (did you mean: {}?)", suggestions.join(", "))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A value outside the domain of an atom or of the positive orthant.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainError {
    /// Atom that rejected the value, if any.
    pub atom: Option<String>,
    /// Argument position within the atom.
    pub argument: Option<usize>,
    /// Offending entry as (row, col).
    pub entry: Option<(usize, usize)>,
    /// Root-to-node path through the expression tree, when known.
    pub path: Vec<String>,
    pub message: String,
}

impl DomainError {
    pub fn new(message: impl Into<String>) -> Self {
        DomainError {
            atom: None,
            argument: None,
            entry: None,
            path: Vec::new(),
            message: message.into(),
        }
    }

    pub fn for_atom(atom: &str, argument: usize, entry: (usize, usize), message: impl Into<String>) -> Self {
        DomainError {
            atom: Some(atom.to_string()),
            argument: Some(argument),
            entry: Some(entry),
            path: Vec::new(),
            message: message.into(),
        }
    }

    pub(crate) fn at_path(mut self, path: &[String]) -> Self {
        if self.path.is_empty() {
            self.path = path.to_vec();
        }
        self
    }
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error")?;
        if let Some(atom) = &self.atom {
            write!(f, " in `{atom}`")?;
            if let Some(arg) = self.argument {
                write!(f, " argument {arg}")?;
            }
        }
        if let Some((r, c)) = self.entry {
            write!(f, " at entry ({r}, {c})")?;
        }
        write!(f, ": {}", self.message)?;
        if !self.path.is_empty() {
            write!(f, " [at {}]", self.path.join(" > "))?;
        }
        Ok(())
    }
}

impl std::error::Error for DomainError {}

/// Categories of problem-document failures. Each has a stable code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    Schema,
    UnsupportedVersion,
    UnknownAtom,
    BadParameter,
    ShapeMismatch,
    NonpositiveConstant,
    NonpositiveVariable,
    DuplicateVariable,
    UnknownVariable,
    UnknownConstant,
}

impl ParseErrorKind {
    pub fn code(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "E001-syntax",
            ParseErrorKind::Schema => "E002-schema",
            ParseErrorKind::UnsupportedVersion => "E003-version",
            ParseErrorKind::UnknownAtom => "E004-unknown-atom",
            ParseErrorKind::BadParameter => "E005-bad-parameter",
            ParseErrorKind::ShapeMismatch => "E006-shape-mismatch",
            ParseErrorKind::NonpositiveConstant => "E007-nonpositive-constant",
            ParseErrorKind::NonpositiveVariable => "E008-nonpositive-variable",
            ParseErrorKind::DuplicateVariable => "E009-duplicate-variable",
            ParseErrorKind::UnknownVariable => "E010-unknown-variable",
            ParseErrorKind::UnknownConstant => "E011-unknown-constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    /// 1-based line and column, for syntax and schema errors.
    pub location: Option<(usize, usize)>,
    /// Where in the document the error occurred, e.g. `constraints[0].lhs`.
    pub context: Option<String>,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            message: message.into(),
            location: None,
            context: None,
        }
    }

    pub(crate) fn in_context(mut self, context: &str) -> Self {
        if self.context.is_none() {
            self.context = Some(context.to_string());
        }
        self
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] ", self.kind.code())?;
        if let Some((line, col)) = self.location {
            write!(f, "line {line}, column {col}: ")?;
        }
        if let Some(ctx) = &self.context {
            write!(f, "in {ctx}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ParseError {}
