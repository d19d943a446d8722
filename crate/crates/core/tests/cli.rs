use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

fn llcp(args: &[&str], path: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_llcp"))
        .args(args)
        .arg(path)
        .output()
        .expect("binary runs")
}

fn temp_problem(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".llcp").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_hello_world() {
    let out = llcp(&["solve", "--json"], &problem("hello_world.llcp"));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "optimal");
    let value = v["optimal_value"].as_f64().unwrap();
    assert!((value - 48.81).abs() < 1e-2, "{value}");
}

#[test]
fn solve_output_is_stable() {
    let a = llcp(&["solve", "--json"], &problem("pf_completion.llcp"));
    let b = llcp(&["solve", "--json"], &problem("pf_completion.llcp"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exit_codes() {
    assert_eq!(llcp(&["check"], &problem("hello_world.llcp")).status.code(), Some(0));
    assert_eq!(llcp(&["check"], &problem("not_dgp.llcp")).status.code(), Some(1));
    assert_eq!(llcp(&["solve"], &problem("not_dgp.llcp")).status.code(), Some(1));
    assert_eq!(llcp(&["solve"], &problem("infeasible.llcp")).status.code(), Some(3));
    assert_eq!(llcp(&["solve"], &problem("unbounded.llcp")).status.code(), Some(4));
    assert_eq!(llcp(&["solve", "--max-iters", "1"], &problem("hello_world.llcp")).status.code(), Some(5));
}

#[test]
fn bad_input_is_reported() {
    let f = temp_problem("{bad");
    let out = llcp(&["solve"], f.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    let missing = llcp(&["check"], Path::new("/nonexistent/problem.llcp"));
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn check_json_names_the_violation() {
    let out = llcp(&["check", "--json"], &problem("not_dgp.llcp"));
    let v = json(&out);
    assert_eq!(v["is_dgp"], false);
    assert!(v["violation"].is_object());
}

#[test]
fn canonicalize_counts() {
    let f = temp_problem(
        r#"{"version": 1, "variables": [{"name": "x", "shape": [1, 1]}, {"name": "y", "shape": [1, 1]}],
 "objective": {"sense": "minimize", "expr": ["add", ["var", "x"], ["var", "y"]]},
 "constraints": [{"type": "geq", "lhs": ["mul", ["var", "x"], ["var", "y"]], "rhs": ["const", 4]}]}"#,
    );
    let out = llcp(&["canonicalize", "--json"], f.path());
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["retrieval"];
    assert_eq!(r["num_coords"], 3);
    assert_eq!(r["num_inequalities"], 2);
    assert_eq!(r["num_equalities"], 0);
    let text = llcp(&["canonicalize"], f.path());
    assert!(String::from_utf8_lossy(&text.stdout).starts_with("coordinates (3):"));
}

#[test]
fn atoms_are_listed() {
    let out = Command::new(env!("CARGO_BIN_EXE_llcp")).args(["atoms", "--json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let names: Vec<_> = v.as_array().unwrap().iter().filter_map(|a| a["name"].as_str()).collect();
    assert!(names.contains(&"pf_eigenvalue"), "{names:?}");
}
