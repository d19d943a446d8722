//! C interface to `llcp`.
//!
//! Problems and solutions are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns
//! an [`LlcpCode`]; on failure [`llcp_last_error_message`] describes what
//! went wrong on the calling thread. Strings handed out by the library are
//! released with [`llcp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use llcp::cli::solution_json;
use llcp::{explain, is_dgp, lower, parse_problem_file, Error, Problem, Solution, SolverSettings, Status};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlcpCode {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    NotDgp = 4,
    InvalidSettings = 5,
    InvalidProblem = 6,
    NotFound = 7,
    BufferTooSmall = 8,
    Panic = 99,
}

/// Solve outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlcpStatus {
    Optimal = 0,
    Infeasible = 1,
    Unbounded = 2,
    MaxIterations = 3,
}

impl From<Status> for LlcpStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Optimal => LlcpStatus::Optimal,
            Status::Infeasible => LlcpStatus::Infeasible,
            Status::Unbounded => LlcpStatus::Unbounded,
            Status::MaxIterations => LlcpStatus::MaxIterations,
        }
    }
}

/// Solver parameters. Start from [`llcp_settings_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LlcpSettings {
    pub mu: f64,
    pub tau0: f64,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_newton: u32,
    pub max_outer: u32,
    pub unbounded_threshold: f64,
}

impl From<&LlcpSettings> for SolverSettings {
    fn from(s: &LlcpSettings) -> Self {
        SolverSettings {
            mu: s.mu,
            tau0: s.tau0,
            gap_tol: s.gap_tol,
            feas_tol: s.feas_tol,
            max_newton: s.max_newton as usize,
            max_outer: s.max_outer as usize,
            unbounded_threshold: s.unbounded_threshold,
            ..SolverSettings::default()
        }
    }
}

/// Parsed problem.
pub struct LlcpProblem {
    problem: Problem,
}

/// Solution together with the problem it answers.
pub struct LlcpSolution {
    problem: Problem,
    solution: Solution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(code: LlcpCode, msg: impl Into<String>) -> LlcpCode {
    set_error(msg);
    code
}

fn error_code(e: &Error) -> LlcpCode {
    match e {
        Error::Parse(_) => LlcpCode::Parse,
        Error::NotDgp(_) => LlcpCode::NotDgp,
        Error::Settings(_) => LlcpCode::InvalidSettings,
        _ => LlcpCode::InvalidProblem,
    }
}

fn guard(f: impl FnOnce() -> LlcpCode) -> LlcpCode {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(LlcpCode::Panic, format!("internal error: {msg}"))
        }
    }
}

unsafe fn utf8<'a>(s: *const c_char) -> Result<&'a str, LlcpCode> {
    if s.is_null() {
        return Err(fail(LlcpCode::NullArgument, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(LlcpCode::InvalidUtf8, format!("string argument is not UTF-8: {e}")))
}

unsafe fn hand_out(s: String, out: *mut *mut c_char) -> LlcpCode {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            LlcpCode::Ok
        }
        Err(_) => fail(LlcpCode::InvalidProblem, "output contains an interior NUL byte"),
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(LlcpCode::NullArgument, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn llcp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn llcp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parse a problem document.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_parse(text: *const c_char, out: *mut *mut LlcpProblem) -> LlcpCode {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let src = match utf8(text) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match parse_problem_file(src) {
            Ok(problem) => {
                *out = Box::into_raw(Box::new(LlcpProblem { problem }));
                LlcpCode::Ok
            }
            Err(e) => fail(LlcpCode::Parse, e.to_string()),
        }
    })
}

/// # Safety
/// `problem` must come from [`llcp_problem_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_free(problem: *mut LlcpProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_is_dgp(problem: *const LlcpProblem, out: *mut bool) -> LlcpCode {
    guard(|| {
        non_null!(problem, out);
        *out = is_dgp(&(*problem).problem);
        LlcpCode::Ok
    })
}

/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_num_constraints(problem: *const LlcpProblem, out: *mut usize) -> LlcpCode {
    guard(|| {
        non_null!(problem, out);
        *out = (*problem).problem.constraints.len();
        LlcpCode::Ok
    })
}

/// DGP analysis as JSON. Free the result with [`llcp_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_explain_json(problem: *const LlcpProblem, out: *mut *mut c_char) -> LlcpCode {
    guard(|| {
        non_null!(problem, out);
        let report = explain(&(*problem).problem);
        match serde_json::to_string_pretty(&report) {
            Ok(s) => hand_out(s, out),
            Err(e) => fail(LlcpCode::InvalidProblem, e.to_string()),
        }
    })
}

/// Text listing of the canonical log-space program. Free the result with
/// [`llcp_string_free`].
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_problem_canonical_dump(problem: *const LlcpProblem, out: *mut *mut c_char) -> LlcpCode {
    guard(|| {
        non_null!(problem, out);
        match lower(&(*problem).problem) {
            Ok((program, _)) => hand_out(program.dump(), out),
            Err(e) => fail(error_code(&e), e.to_string()),
        }
    })
}

#[no_mangle]
pub extern "C" fn llcp_settings_default() -> LlcpSettings {
    let s = SolverSettings::default();
    LlcpSettings {
        mu: s.mu,
        tau0: s.tau0,
        gap_tol: s.gap_tol,
        feas_tol: s.feas_tol,
        max_newton: s.max_newton.min(u32::MAX as usize) as u32,
        max_outer: s.max_outer.min(u32::MAX as usize) as u32,
        unbounded_threshold: s.unbounded_threshold,
    }
}

/// Solve a problem. `settings` may be null for the defaults. A solve that
/// ends infeasible, unbounded, or at the iteration limit still returns
/// `Ok`; inspect [`llcp_solution_status`].
///
/// # Safety
/// `problem` must be a live handle, `settings` null or valid, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_solve(
    problem: *const LlcpProblem,
    settings: *const LlcpSettings,
    out: *mut *mut LlcpSolution,
) -> LlcpCode {
    guard(|| {
        non_null!(problem, out);
        *out = ptr::null_mut();
        let settings = if settings.is_null() {
            SolverSettings::default()
        } else {
            SolverSettings::from(&*settings)
        };
        let problem = &(*problem).problem;
        match llcp::solve_problem(problem, &settings) {
            Ok(solution) => {
                *out = Box::into_raw(Box::new(LlcpSolution {
                    problem: problem.clone(),
                    solution,
                }));
                LlcpCode::Ok
            }
            Err(e) => fail(error_code(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `solution` must come from [`llcp_solve`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_free(solution: *mut LlcpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_status(solution: *const LlcpSolution, out: *mut LlcpStatus) -> LlcpCode {
    guard(|| {
        non_null!(solution, out);
        *out = (*solution).solution.status.into();
        LlcpCode::Ok
    })
}

/// Optimal value of the original problem; NaN when there is none.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_optimal_value(solution: *const LlcpSolution, out: *mut f64) -> LlcpCode {
    guard(|| {
        non_null!(solution, out);
        *out = (*solution).solution.optimal_value;
        LlcpCode::Ok
    })
}

unsafe fn copy_matrix(
    m: &nalgebra::DMatrix<f64>,
    rows: *mut usize,
    cols: *mut usize,
    buf: *mut f64,
    len: usize,
) -> LlcpCode {
    *rows = m.nrows();
    *cols = m.ncols();
    let need = m.len();
    if buf.is_null() || len < need {
        return fail(LlcpCode::BufferTooSmall, format!("buffer holds {len} values; {need} needed"));
    }
    let dst = std::slice::from_raw_parts_mut(buf, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dst[i * m.ncols() + j] = m[(i, j)];
        }
    }
    LlcpCode::Ok
}

/// Copy the value of variable `name` into `buf` in row-major order.
/// `rows` and `cols` are always written when the variable exists, so a
/// call with a null `buf` reports the shape with `BufferTooSmall`.
///
/// # Safety
/// `solution` must be a live handle, `name` NUL-terminated, `rows` and
/// `cols` writable, and `buf` null or valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_variable(
    solution: *const LlcpSolution,
    name: *const c_char,
    rows: *mut usize,
    cols: *mut usize,
    buf: *mut f64,
    len: usize,
) -> LlcpCode {
    guard(|| {
        non_null!(solution, rows, cols);
        let name = match utf8(name) {
            Ok(s) => s,
            Err(c) => return c,
        };
        match (*solution).solution.value(name) {
            Some(m) => copy_matrix(m, rows, cols, buf, len),
            None => fail(LlcpCode::NotFound, format!("no variable named `{name}`")),
        }
    })
}

/// Copy the dual value of the constraint at position `index` into `buf`
/// in row-major order, with the same shape protocol as
/// [`llcp_solution_variable`].
///
/// # Safety
/// As for [`llcp_solution_variable`].
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_dual(
    solution: *const LlcpSolution,
    index: usize,
    rows: *mut usize,
    cols: *mut usize,
    buf: *mut f64,
    len: usize,
) -> LlcpCode {
    guard(|| {
        non_null!(solution, rows, cols);
        let s = &*solution;
        let Some(c) = s.problem.constraints.get(index) else {
            return fail(LlcpCode::NotFound, format!("no constraint at position {index}"));
        };
        match s.solution.dual(c.id) {
            Some(m) => copy_matrix(m, rows, cols, buf, len),
            None => fail(LlcpCode::NotFound, format!("no dual value for constraint {index}")),
        }
    })
}

/// The solution in the same JSON layout as `llcp solve --json`. Free the
/// result with [`llcp_string_free`].
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn llcp_solution_to_json(solution: *const LlcpSolution, out: *mut *mut c_char) -> LlcpCode {
    guard(|| {
        non_null!(solution, out);
        let s = &*solution;
        match serde_json::to_string_pretty(&solution_json(&s.problem, &s.solution)) {
            Ok(text) => hand_out(text, out),
            Err(e) => fail(LlcpCode::InvalidProblem, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn llcp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
