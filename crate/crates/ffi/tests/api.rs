use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use llcp_ffi::*;

const HELLO: &str = r#"{"version": 1,
 "variables": [{"name": "x", "shape": [1, 1]}, {"name": "y", "shape": [1, 1]}],
 "objective": {"sense": "minimize", "expr": ["mul", ["var", "x"], ["var", "y"]]},
 "constraints": [{"type": "leq", "lhs": ["exp", ["div", ["var", "y"], ["var", "x"]]], "rhs": ["log", ["var", "y"]]}]}"#;

fn parse(text: &str) -> (LlcpCode, *mut LlcpProblem) {
    let c = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    let code = unsafe { llcp_problem_parse(c.as_ptr(), &mut p) };
    (code, p)
}

fn last_error() -> String {
    let p = llcp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { llcp_string_free(p) };
    s
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(llcp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn solve_round_trip() {
    let (code, p) = parse(HELLO);
    assert_eq!(code, LlcpCode::Ok);
    unsafe {
        let mut dgp = false;
        assert_eq!(llcp_problem_is_dgp(p, &mut dgp), LlcpCode::Ok);
        assert!(dgp);
        let mut n = 0usize;
        assert_eq!(llcp_problem_num_constraints(p, &mut n), LlcpCode::Ok);
        assert_eq!(n, 1);

        let mut s = ptr::null_mut();
        assert_eq!(llcp_solve(p, ptr::null(), &mut s), LlcpCode::Ok);
        let mut status = LlcpStatus::Infeasible;
        assert_eq!(llcp_solution_status(s, &mut status), LlcpCode::Ok);
        assert_eq!(status, LlcpStatus::Optimal);
        let mut value = 0.0;
        llcp_solution_optimal_value(s, &mut value);
        assert!((value - 48.81026898447343).abs() / value < 1e-6, "{value}");

        let (mut r, mut c) = (0usize, 0usize);
        let name = CString::new("x").unwrap();
        assert_eq!(llcp_solution_variable(s, name.as_ptr(), &mut r, &mut c, ptr::null_mut(), 0), LlcpCode::BufferTooSmall);
        assert_eq!((r, c), (1, 1));
        let mut x = [0.0f64; 1];
        assert_eq!(llcp_solution_variable(s, name.as_ptr(), &mut r, &mut c, x.as_mut_ptr(), 1), LlcpCode::Ok);
        assert!((x[0] - 11.780089932635645).abs() < 1e-4, "{}", x[0]);

        let mut d = [0.0f64; 1];
        assert_eq!(llcp_solution_dual(s, 0, &mut r, &mut c, d.as_mut_ptr(), 1), LlcpCode::Ok);
        assert!((d[0] - 2.843059917747706).abs() < 1e-4, "{}", d[0]);
        assert_eq!(llcp_solution_dual(s, 3, &mut r, &mut c, d.as_mut_ptr(), 1), LlcpCode::NotFound);

        let mut json = ptr::null_mut();
        assert_eq!(llcp_solution_to_json(s, &mut json), LlcpCode::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
        assert_eq!(v["status"], "optimal");

        llcp_solution_free(s);
        llcp_problem_free(p);
    }
}

#[test]
fn settings_are_honoured() {
    let (_, p) = parse(HELLO);
    unsafe {
        let mut settings = llcp_settings_default();
        assert_eq!(settings.mu, 10.0);
        settings.max_outer = 1;
        let mut s = ptr::null_mut();
        assert_eq!(llcp_solve(p, &settings, &mut s), LlcpCode::Ok);
        let mut status = LlcpStatus::Optimal;
        llcp_solution_status(s, &mut status);
        assert_eq!(status, LlcpStatus::MaxIterations);
        llcp_solution_free(s);

        settings.mu = 0.5;
        assert_eq!(llcp_solve(p, &settings, &mut s), LlcpCode::InvalidSettings);
        assert!(s.is_null());
        assert!(last_error().contains("mu"), "{}", last_error());
        llcp_problem_free(p);
    }
}

#[test]
fn errors_are_reported() {
    let (code, p) = parse("{");
    assert_eq!(code, LlcpCode::Parse);
    assert!(p.is_null());
    assert!(!last_error().is_empty());

    let mut out = ptr::null_mut();
    assert_eq!(unsafe { llcp_problem_parse(ptr::null(), &mut out) }, LlcpCode::NullArgument);
    let mut flag = false;
    assert_eq!(unsafe { llcp_problem_is_dgp(ptr::null(), &mut flag) }, LlcpCode::NullArgument);

    let bad = [b'{', 0xff, 0];
    assert_eq!(unsafe { llcp_problem_parse(bad.as_ptr().cast(), &mut out) }, LlcpCode::InvalidUtf8);
}

#[test]
fn not_dgp_problems() {
    let (code, p) = parse(
        r#"{"version": 1, "variables": [{"name": "x", "shape": [1, 1]}],
 "objective": {"sense": "minimize", "expr": ["one_minus", ["var", "x"]]}, "constraints": []}"#,
    );
    assert_eq!(code, LlcpCode::Ok);
    unsafe {
        let mut dgp = true;
        llcp_problem_is_dgp(p, &mut dgp);
        assert!(!dgp);
        let mut text = ptr::null_mut();
        assert_eq!(llcp_problem_explain_json(p, &mut text), LlcpCode::Ok);
        let v: serde_json::Value = serde_json::from_str(&take_string(text)).unwrap();
        assert_eq!(v["is_dgp"], false);
        assert_eq!(llcp_problem_canonical_dump(p, &mut text), LlcpCode::NotDgp);
        let mut s = ptr::null_mut();
        assert_eq!(llcp_solve(p, ptr::null(), &mut s), LlcpCode::NotDgp);
        llcp_problem_free(p);
    }
}

#[test]
fn canonical_dump() {
    let (_, p) = parse(HELLO);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { llcp_problem_canonical_dump(p, &mut text) }, LlcpCode::Ok);
    assert!(take_string(text).starts_with("coordinates"));
    unsafe { llcp_problem_free(p) };
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("llcp.h");
    assert!(header.exists());
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).status() else {
        eprintln!("cc not available; skipping");
        return;
    };
    assert!(status.success());
}
