//! Curvature analysis by the log-log composition rule, and DGP verification
//! of whole problems.
//!
//! For an atom `h` with children `g_i`, the node is log-log convex when `h`
//! is log-log convex (or affine) and every `g_i` is log-log affine, or log-log
//! convex where `h` is nondecreasing in argument `i`, or log-log concave where
//! `h` is nonincreasing in it. The concave rule is symmetric. A log-log affine
//! `h` stays affine over affine children and otherwise falls back to whichever
//! of the two rules holds. Anything else is `Unknown`.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::atoms::{Atom, Curvature, Monotonicity};
use crate::expr::{ExprKind, Expression};
use crate::problem::{ConstraintId, ConstraintKind, Problem, Sense};

/// Memoizing curvature analyzer. The memo is keyed by node identity and is
/// confined to one analyzer value.
#[derive(Debug, Default)]
pub struct Analyzer {
    memo: HashMap<usize, Curvature>,
}

impl Analyzer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn curvature(&mut self, expr: &Expression) -> Curvature {
        if let Some(c) = self.memo.get(&expr.node_id()) {
            return *c;
        }
        let c = match expr.kind() {
            ExprKind::Constant(_) => Curvature::Constant,
            ExprKind::Variable { .. } => Curvature::Affine,
            ExprKind::Atom { atom, args } => {
                let children: Vec<Curvature> = args.iter().map(|a| self.curvature(a)).collect();
                compose(atom, &children)
            }
        };
        self.memo.insert(expr.node_id(), c);
        c
    }
}

/// Sound log-log curvature of an expression; `Unknown` when the composition
/// rule cannot certify it.
pub fn curvature(expr: &Expression) -> Curvature {
    Analyzer::new().curvature(expr)
}

fn admits(target: Curvature, m: Monotonicity, child: Curvature) -> bool {
    if child.is_affine() {
        return true;
    }
    match (target, child, m) {
        (Curvature::Convex, Curvature::Convex, Monotonicity::Nondecreasing) => true,
        (Curvature::Convex, Curvature::Concave, Monotonicity::Nonincreasing) => true,
        (Curvature::Concave, Curvature::Concave, Monotonicity::Nondecreasing) => true,
        (Curvature::Concave, Curvature::Convex, Monotonicity::Nonincreasing) => true,
        _ => false,
    }
}

/// Composition rule for one atom node given its children's curvature.
pub fn compose(atom: &Atom, children: &[Curvature]) -> Curvature {
    if children.iter().all(|c| *c == Curvature::Constant) {
        return Curvature::Constant;
    }
    let h = atom.curvature();
    if h == Curvature::Affine && children.iter().all(|c| c.is_affine()) {
        return Curvature::Affine;
    }
    let rule_holds = |target: Curvature| {
        h.le(target)
            && children
                .iter()
                .enumerate()
                .all(|(i, c)| admits(target, atom.monotonicity(i), *c))
    };
    if rule_holds(Curvature::Convex) {
        Curvature::Convex
    } else if rule_holds(Curvature::Concave) {
        Curvature::Concave
    } else {
        Curvature::Unknown
    }
}

fn expected_for(target: Curvature, m: Monotonicity) -> &'static str {
    match (target, m) {
        (Curvature::Convex, Monotonicity::Nondecreasing) | (Curvature::Concave, Monotonicity::Nonincreasing) => {
            "log-log convex or affine"
        }
        (Curvature::Concave, Monotonicity::Nondecreasing) | (Curvature::Convex, Monotonicity::Nonincreasing) => {
            "log-log concave or affine"
        }
        _ => "log-log affine",
    }
}

/// Why the composition rule fails at an atom node: the offending argument
/// and a readable clause.
fn rule_failure(atom: &Atom, children: &[Curvature]) -> (Option<usize>, String) {
    let h = atom.curvature();
    let target = if h == Curvature::Concave {
        Curvature::Concave
    } else {
        Curvature::Convex
    };
    let bad = children
        .iter()
        .enumerate()
        .find(|(i, c)| !admits(target, atom.monotonicity(*i), **c))
        .map(|(i, _)| i);
    let Some(i) = bad else {
        return (None, format!("`{}` composes to {}", atom.label(), compose(atom, children)));
    };
    let m = atom.monotonicity(i);
    let clause = if h == Curvature::Affine {
        let other = (0..children.len())
            .find(|&j| j != i && !admits(Curvature::Concave, atom.monotonicity(j), children[j]))
            .unwrap_or(i);
        format!(
            "`{}` is log-log affine; its arguments must be uniformly convex-compatible or concave-compatible, \
             but argument {i} is {} ({m}) and argument {other} is {} ({})",
            atom.label(),
            children[i],
            children[other],
            atom.monotonicity(other)
        )
    } else {
        format!(
            "`{}` is {h} and {m} in argument {i}; argument {i} must be {}, found {}",
            atom.label(),
            expected_for(target, m),
            children[i]
        )
    };
    (Some(i), clause)
}

/// Inferred curvature of one tree position.
#[derive(Debug, Clone, Serialize)]
pub struct Judgment {
    /// Position from the root, e.g. `objective/0/1` (child indices).
    pub path: String,
    pub node: String,
    pub curvature: Curvature,
    /// For `Unknown` nodes whose children are all known: the argument that
    /// broke the rule.
    pub failed_argument: Option<usize>,
    pub clause: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstraintJudgments {
    pub index: usize,
    pub id: ConstraintId,
    pub kind: ConstraintKind,
    pub lhs: Vec<Judgment>,
    pub rhs: Vec<Judgment>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PathStep {
    pub node: String,
    pub curvature: Curvature,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChildCurvature {
    pub argument: usize,
    pub node: String,
    pub curvature: Curvature,
}

/// The first (outermost, leftmost) DGP violation of a problem.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    /// `objective`, or `constraint <i> lhs|rhs`.
    pub location: String,
    /// The requirement on the expression root that fails.
    pub message: String,
    /// Root-to-node path ending at the failing node.
    pub path: Vec<PathStep>,
    /// Composition-rule clause violated at the failing node, if any.
    pub clause: Option<String>,
    /// Inferred curvature of each child of the failing node.
    pub children: Vec<ChildCurvature>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DgpReport {
    pub is_dgp: bool,
    pub sense: Sense,
    pub objective: Vec<Judgment>,
    pub constraints: Vec<ConstraintJudgments>,
    pub violation: Option<Violation>,
}

impl DgpReport {
    /// Root-to-leaf node list of the first failure; empty when DGP.
    pub fn violation_path(&self) -> &[PathStep] {
        self.violation.as_ref().map(|v| v.path.as_slice()).unwrap_or(&[])
    }

    pub fn summary(&self) -> String {
        match &self.violation {
            None => "problem is DGP".to_string(),
            Some(v) => {
                let mut s = format!("{}: {}", v.location, v.message);
                if let Some(clause) = &v.clause {
                    let _ = write!(s, "; {clause}");
                }
                s
            }
        }
    }

    /// Multi-line human-readable report.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "DGP: {}", if self.is_dgp { "yes" } else { "no" });
        let root = |js: &[Judgment]| js.first().map(|j| j.curvature).unwrap_or(Curvature::Unknown);
        let _ = writeln!(out, "objective ({}): {}", self.sense, root(&self.objective));
        for c in &self.constraints {
            let op = match c.kind {
                ConstraintKind::LessEq => "<=",
                ConstraintKind::Eq => "==",
            };
            let _ = writeln!(out, "constraint {}: {} {op} {}", c.index, root(&c.lhs), root(&c.rhs));
        }
        if let Some(v) = &self.violation {
            let _ = writeln!(out, "violation in {}: {}", v.location, v.message);
            let steps: Vec<String> = v.path.iter().map(|p| format!("{} [{}]", p.node, p.curvature)).collect();
            let _ = writeln!(out, "  path: {}", steps.join(" > "));
            if let Some(clause) = &v.clause {
                let _ = writeln!(out, "  rule: {clause}");
            }
            for ch in &v.children {
                let _ = writeln!(out, "  argument {}: {} is {}", ch.argument, ch.node, ch.curvature);
            }
        }
        out
    }
}

fn judge(analyzer: &mut Analyzer, expr: &Expression, path: String, out: &mut Vec<Judgment>) {
    let curvature = analyzer.curvature(expr);
    let mut judgment = Judgment {
        path: path.clone(),
        node: expr.label(),
        curvature,
        failed_argument: None,
        clause: None,
    };
    if let ExprKind::Atom { atom, args } = expr.kind() {
        let children: Vec<Curvature> = args.iter().map(|a| analyzer.curvature(a)).collect();
        if curvature == Curvature::Unknown && children.iter().all(|c| *c != Curvature::Unknown) {
            let (arg, clause) = rule_failure(atom, &children);
            judgment.failed_argument = arg;
            judgment.clause = Some(clause);
        }
        out.push(judgment);
        for (k, a) in args.iter().enumerate() {
            judge(analyzer, a, format!("{path}/{k}"), out);
        }
    } else {
        out.push(judgment);
    }
}

/// Walk from the root into the first `Unknown` child until reaching the node
/// where the rule itself fails.
fn violation_at(
    analyzer: &mut Analyzer,
    root: &Expression,
    location: String,
    message: String,
) -> Violation {
    let mut path = Vec::new();
    let mut node = root.clone();
    loop {
        let curvature = analyzer.curvature(&node);
        path.push(PathStep {
            node: node.label(),
            curvature,
        });
        if curvature != Curvature::Unknown {
            break;
        }
        match node.args().iter().find(|a| analyzer.curvature(a) == Curvature::Unknown) {
            Some(next) => node = next.clone(),
            None => break,
        }
    }
    let children: Vec<ChildCurvature> = node
        .args()
        .iter()
        .enumerate()
        .map(|(k, a)| ChildCurvature {
            argument: k,
            node: a.label(),
            curvature: analyzer.curvature(a),
        })
        .collect();
    let clause = match node.kind() {
        ExprKind::Atom { atom, .. } if analyzer.curvature(&node) == Curvature::Unknown => {
            let cs: Vec<Curvature> = children.iter().map(|c| c.curvature).collect();
            Some(rule_failure(atom, &cs).1)
        }
        _ => None,
    };
    Violation {
        location,
        message,
        path,
        clause,
        children,
    }
}

/// Full DGP report for a problem.
pub fn explain(problem: &Problem) -> DgpReport {
    let mut analyzer = Analyzer::new();
    let mut objective = Vec::new();
    judge(&mut analyzer, &problem.objective, "objective".into(), &mut objective);

    let mut violation = None;
    let obj_curv = analyzer.curvature(&problem.objective);
    let (ok, need) = match problem.sense {
        Sense::Minimize => (obj_curv.is_convex(), "Minimize requires log-log convex"),
        Sense::Maximize => (obj_curv.is_concave(), "Maximize requires log-log concave"),
    };
    if !ok {
        violation = Some(violation_at(
            &mut analyzer,
            &problem.objective,
            "objective".into(),
            format!("{need}; found {obj_curv}"),
        ));
    }

    let mut constraints = Vec::with_capacity(problem.constraints.len());
    for (index, c) in problem.constraints.iter().enumerate() {
        let mut lhs = Vec::new();
        let mut rhs = Vec::new();
        judge(&mut analyzer, &c.lhs, format!("constraint{index}/lhs"), &mut lhs);
        judge(&mut analyzer, &c.rhs, format!("constraint{index}/rhs"), &mut rhs);
        let (lc, rc) = (analyzer.curvature(&c.lhs), analyzer.curvature(&c.rhs));
        if violation.is_none() {
            let failure = match c.kind {
                ConstraintKind::LessEq if !lc.is_convex() => Some((
                    &c.lhs,
                    "lhs",
                    format!("inequality lhs requires log-log convex; found {lc}"),
                )),
                ConstraintKind::LessEq if !rc.is_concave() => Some((
                    &c.rhs,
                    "rhs",
                    format!("inequality rhs requires log-log concave; found {rc}"),
                )),
                ConstraintKind::Eq if !lc.is_affine() => Some((
                    &c.lhs,
                    "lhs",
                    format!("equality requires log-log affine; lhs is {lc}"),
                )),
                ConstraintKind::Eq if !rc.is_affine() => Some((
                    &c.rhs,
                    "rhs",
                    format!("equality requires log-log affine; rhs is {rc}"),
                )),
                _ => None,
            };
            if let Some((side, name, message)) = failure {
                violation = Some(violation_at(
                    &mut analyzer,
                    side,
                    format!("constraint {index} {name}"),
                    message,
                ));
            }
        }
        constraints.push(ConstraintJudgments {
            index,
            id: c.id,
            kind: c.kind,
            lhs,
            rhs,
        });
    }

    DgpReport {
        is_dgp: violation.is_none(),
        sense: problem.sense,
        objective,
        constraints,
        violation,
    }
}

/// Whether the problem is a disciplined geometric program.
pub fn is_dgp(problem: &Problem) -> bool {
    explain(problem).is_dgp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{apply, scalar_constant, variable, Shape};

    fn var(n: &str) -> Expression {
        variable(n, Shape::scalar()).unwrap()
    }
    fn ap(atom: Atom, args: Vec<Expression>) -> Expression {
        apply(atom, args).unwrap()
    }

    fn hello_world() -> Problem {
        let (x, y) = (var("x"), var("y"));
        let lhs = ap(Atom::Exp, vec![&y / &x]);
        let rhs = ap(Atom::Log, vec![y.clone()]);
        Problem::minimize(&x * &y, vec![lhs.le(&rhs).unwrap()]).unwrap()
    }

    #[test]
    fn composition_examples() {
        let (x, y) = (var("x"), var("y"));
        assert_eq!(curvature(&(&x * &y)), Curvature::Affine);
        assert_eq!(curvature(&ap(Atom::Exp, vec![&y / &x])), Curvature::Convex);
        let inner = ap(Atom::OneMinus, vec![x.clone()]);
        assert_eq!(curvature(&inner), Curvature::Concave);
        assert_eq!(curvature(&ap(Atom::OneMinus, vec![inner])), Curvature::Unknown);
        let loglog = ap(Atom::Log, vec![ap(Atom::Log, vec![y.clone()])]);
        assert_eq!(curvature(&loglog), Curvature::Concave);
        assert_eq!(curvature(&scalar_constant(2.0).unwrap()), Curvature::Constant);
        let c = ap(Atom::Exp, vec![scalar_constant(2.0).unwrap()]);
        assert_eq!(curvature(&c), Curvature::Constant);
    }

    #[test]
    fn monotonicity_drives_composition() {
        let (x, y) = (var("x"), var("y"));
        let sum = &x + &y;
        assert_eq!(curvature(&sum.pow(2.0)), Curvature::Convex);
        assert_eq!(curvature(&sum.pow(-1.0)), Curvature::Concave);
        assert_eq!(curvature(&(&x / &sum)), Curvature::Concave);
        assert_eq!(curvature(&(&sum / &x)), Curvature::Convex);
        // Convex times concave under an affine atom is not certifiable.
        let conc = ap(Atom::OneMinus, vec![x.clone()]);
        assert_eq!(curvature(&(&sum * &conc)), Curvature::Unknown);
        // Entropy is non-monotone: only affine arguments are admitted.
        assert_eq!(curvature(&ap(Atom::Entropy, vec![x.clone()])), Curvature::Concave);
        assert_eq!(curvature(&ap(Atom::Entropy, vec![ap(Atom::Min, vec![x, y])])), Curvature::Unknown);
    }

    #[test]
    fn hello_world_is_dgp() {
        let report = explain(&hello_world());
        assert!(report.is_dgp);
        assert!(report.violation_path().is_empty());
        assert!(is_dgp(&hello_world()));
    }

    #[test]
    fn concave_minimize_is_rejected_at_root() {
        let p = Problem::minimize(ap(Atom::OneMinus, vec![var("x")]), vec![]).unwrap();
        let report = explain(&p);
        assert!(!report.is_dgp);
        let v = report.violation.unwrap();
        assert_eq!(v.location, "objective");
        assert_eq!(v.message, "Minimize requires log-log convex; found log-log concave");
        assert_eq!(v.path.len(), 1);
        assert_eq!(v.path[0].node, "one_minus");
    }

    #[test]
    fn nonaffine_equality_is_rejected() {
        let (x, y) = (var("x"), var("y"));
        let c = (&x + &y).equals(&scalar_constant(1.0).unwrap()).unwrap();
        let p = Problem::minimize(x.clone(), vec![c]).unwrap();
        let report = explain(&p);
        let v = report.violation.unwrap();
        assert_eq!(v.location, "constraint 0 lhs");
        assert_eq!(v.message, "equality requires log-log affine; lhs is log-log convex");
    }

    #[test]
    fn violation_path_descends_to_failing_node() {
        let x = var("x");
        let bad = ap(Atom::OneMinus, vec![ap(Atom::OneMinus, vec![x.clone()])]);
        let p = Problem::maximize(&bad * &x, vec![]).unwrap();
        let v = explain(&p).violation.unwrap();
        let nodes: Vec<&str> = v.path.iter().map(|s| s.node.as_str()).collect();
        assert_eq!(nodes, vec!["mul", "one_minus"]);
        assert_eq!(v.children[0].curvature, Curvature::Concave);
        let clause = v.clause.unwrap();
        assert!(clause.contains("nonincreasing in argument 0"), "{clause}");
        assert!(clause.contains("log-log convex or affine"), "{clause}");
    }

    #[test]
    fn judgments_cover_every_position() {
        let report = explain(&hello_world());
        // x*y has 3 nodes; exp(y/x) has 4; log(y) has 2.
        assert_eq!(report.objective.len(), 3);
        assert_eq!(report.constraints[0].lhs.len(), 4);
        assert_eq!(report.constraints[0].rhs.len(), 2);
        assert_eq!(report.constraints[0].lhs[1].path, "constraint0/lhs/0");
    }

    #[test]
    fn analysis_is_deterministic() {
        let x = var("x");
        let e = ap(Atom::Log, vec![ap(Atom::Log, vec![&x + &x])]);
        let first = curvature(&e);
        for _ in 0..5 {
            assert_eq!(curvature(&e), first);
        }
    }
}
