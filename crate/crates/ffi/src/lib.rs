//! C ABI over the energy compiler and the classical solvers.
//!
//! Objects are opaque handles created by `foldq_*` constructors and released with the
//! matching `_free` function. Every fallible call returns a [`FoldqStatus`]; on failure
//! [`foldq_last_error`] describes the problem. Strings returned through `out` pointers
//! are owned by the caller and must be released with [`foldq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use foldq::ising::{to_ising, IsingModel};
use foldq::pipeline::parse_plan;
use foldq::poly::{fix_variables, MultilinearPolynomial};
use foldq::quadratize::quadratize;
use foldq::solvers::{exhaustive_ground_states, simulated_anneal, SaSchedule};

/// Result of a call. The nonzero values match the command-line exit codes where they
/// overlap.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldqStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or another misuse of the API.
    InvalidArgument = 1,
    Validation = 2,
    Capacity = 3,
    StageFailure = 4,
    /// The library panicked; the handles passed in should not be used again.
    Panic = 5,
}

pub struct FoldqPolynomial(MultilinearPolynomial);

pub struct FoldqIsing(IsingModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Failure {
    Arg(String),
    Core(foldq::Error),
}

impl From<foldq::Error> for Failure {
    fn from(e: foldq::Error) -> Self {
        Failure::Core(e)
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FoldqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FoldqStatus::Ok
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_error(msg);
            FoldqStatus::InvalidArgument
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                3 => FoldqStatus::Capacity,
                4 => FoldqStatus::StageFailure,
                _ => FoldqStatus::Validation,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            FoldqStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::Arg(format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::Arg(format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::Arg(format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Arg("output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Arg("output pointer is null".into()));
    }
    let c = CString::new(s).map_err(|_| Failure::Arg("string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string(v).map_err(|e| Failure::Core(e.into()))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn foldq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn foldq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foldq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a bundled polynomial fixture such as `exp6`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_fixture(
    name: *const c_char,
    out: *mut *mut FoldqPolynomial,
) -> FoldqStatus {
    guard(|| {
        let p = foldq::fixtures::polynomial(str_arg(name, "name")?)?;
        put(out, FoldqPolynomial(p))
    })
}

/// Parses the text form, e.g. `-q2 + 2q1q2 + 2q2q3 - 3q1q2q3`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_parse(
    text: *const c_char,
    out: *mut *mut FoldqPolynomial,
) -> FoldqStatus {
    guard(|| {
        let p = MultilinearPolynomial::parse(str_arg(text, "text")?)?;
        put(out, FoldqPolynomial(p))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_from_json(
    json: *const c_char,
    out: *mut *mut FoldqPolynomial,
) -> FoldqStatus {
    guard(|| {
        let p: MultilinearPolynomial = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| foldq::Error::validation(e.to_string()))?;
        put(out, FoldqPolynomial(p))
    })
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_to_json(
    p: *const FoldqPolynomial,
    out: *mut *mut c_char,
) -> FoldqStatus {
    guard(|| put_string(out, json(&handle(p, "polynomial")?.0)?))
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_to_text(
    p: *const FoldqPolynomial,
    out: *mut *mut c_char,
) -> FoldqStatus {
    guard(|| put_string(out, handle(p, "polynomial")?.0.to_string()))
}

/// Number of variables, 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_arity(p: *const FoldqPolynomial) -> usize {
    p.as_ref().map_or(0, |p| p.0.arity())
}

/// Exact value at an assignment (bit `i - 1` of `mask` is `q_i`) as `num / den`.
///
/// # Safety
/// `p` must be a live handle, `num` and `den` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_evaluate(
    p: *const FoldqPolynomial,
    mask: u64,
    num: *mut i64,
    den: *mut i64,
) -> FoldqStatus {
    guard(|| {
        let p = &handle(p, "polynomial")?.0;
        if num.is_null() || den.is_null() {
            return Err(Failure::Arg("output pointer is null".into()));
        }
        if p.arity() < 64 && mask >> p.arity() != 0 {
            return Err(Failure::Arg(format!("mask has bits beyond arity {}", p.arity())));
        }
        let v = p.evaluate(mask);
        *num = *v.numer();
        *den = *v.denom();
        Ok(())
    })
}

/// Fixes `vars[k]` (1-based) to `values[k]` (0 or 1). With `relabel` the remaining
/// variables are renumbered from 1.
///
/// # Safety
/// `p` must be a live handle, `vars` and `values` arrays of length `len`, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_fix(
    p: *const FoldqPolynomial,
    vars: *const usize,
    values: *const u8,
    len: usize,
    relabel: bool,
    out: *mut *mut FoldqPolynomial,
) -> FoldqStatus {
    guard(|| {
        let p = &handle(p, "polynomial")?.0;
        if len > 0 && (vars.is_null() || values.is_null()) {
            return Err(Failure::Arg("vars or values is null".into()));
        }
        let bindings: Vec<(usize, bool)> = (0..len)
            .map(|k| match *values.add(k) {
                0 => Ok((*vars.add(k), false)),
                1 => Ok((*vars.add(k), true)),
                v => Err(Failure::Arg(format!("value {v} is not 0 or 1"))),
            })
            .collect::<Result<_, _>>()?;
        put(out, FoldqPolynomial(fix_variables(p, &bindings, relabel)?))
    })
}

/// Reduces to degree two. `plan` is null for the greedy plan with automatic deltas,
/// or a list such as `q1q2=6,q3q4=4` (a pair without `=` gets the automatic delta).
/// The result has the ancillas appended after the original variables.
///
/// # Safety
/// `p` must be a live handle, `plan` null or a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_quadratize(
    p: *const FoldqPolynomial,
    plan: *const c_char,
    out: *mut *mut FoldqPolynomial,
) -> FoldqStatus {
    guard(|| {
        let p = &handle(p, "polynomial")?.0;
        let plan = if plan.is_null() {
            None
        } else {
            Some(parse_plan(str_arg(plan, "plan")?)?)
        };
        let q = quadratize(p, plan.as_ref())?;
        put(out, FoldqPolynomial(q.polynomial))
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foldq_polynomial_free(p: *mut FoldqPolynomial) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Normalized spin model of a polynomial of degree at most two.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_from_polynomial(
    p: *const FoldqPolynomial,
    out: *mut *mut FoldqIsing,
) -> FoldqStatus {
    guard(|| {
        let m = to_ising(&handle(p, "polynomial")?.0)?;
        put(out, FoldqIsing(m))
    })
}

/// Loads a bundled Ising fixture such as `exp6_ising`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_fixture(name: *const c_char, out: *mut *mut FoldqIsing) -> FoldqStatus {
    guard(|| {
        let m = foldq::fixtures::ising(str_arg(name, "name")?)?;
        put(out, FoldqIsing(m))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_from_json(json: *const c_char, out: *mut *mut FoldqIsing) -> FoldqStatus {
    guard(|| {
        let m: IsingModel = serde_json::from_str(str_arg(json, "json")?)
            .map_err(|e| foldq::Error::validation(e.to_string()))?;
        put(out, FoldqIsing(m))
    })
}

/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_to_json(m: *const FoldqIsing, out: *mut *mut c_char) -> FoldqStatus {
    guard(|| put_string(out, json(&handle(m, "model")?.0)?))
}

/// Number of spins, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_num_spins(m: *const FoldqIsing) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn foldq_ising_free(m: *mut FoldqIsing) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// All ground states by enumeration, as a JSON sample set.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_solve_exhaustive(m: *const FoldqIsing, out: *mut *mut c_char) -> FoldqStatus {
    guard(|| {
        let set = exhaustive_ground_states(&handle(m, "model")?.0)?;
        put_string(out, json(&set)?)
    })
}

/// Simulated annealing on a geometric beta schedule, as a JSON sample set. The result
/// depends only on the arguments.
///
/// # Safety
/// `m` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn foldq_solve_sa(
    m: *const FoldqIsing,
    reads: usize,
    sweeps: usize,
    beta_min: f64,
    beta_max: f64,
    seed: u64,
    out: *mut *mut c_char,
) -> FoldqStatus {
    guard(|| {
        let m = &handle(m, "model")?.0;
        let schedule = SaSchedule::geometric(beta_min, beta_max, sweeps)?;
        put_string(out, json(&simulated_anneal(m, &schedule, seed, reads)?)?)
    })
}
