//! C ABI over the solver and simulator: opaque handles, integer status
//! codes, and a thread-local last-error message.
//!
//! Ownership rules: every `*_new`/`*_load`/`*_generate`/`ca_solve` output
//! must be released with the matching `*_free`; handles are not thread-safe
//! to mutate but may be shared immutably across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use carealloc::adp::{self, BiasWeights, CandidateSet};
use carealloc::model::{gen_synthetic, ModelSpec};
use carealloc::sim::{paired_compare, Policy, SimConfig};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CaStatus {
    Ok = 0,
    /// Null pointer, bad enum value, or argument out of range.
    InvalidArgument = 1,
    /// Input could not be read or parsed as a model spec.
    ParseError = 2,
    /// Solver failure (no convergence, unbounded, or infeasible).
    SolveError = 3,
    /// Simulation failure.
    SimError = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message for the most recent error on this thread, or null if none.
/// The pointer is valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ca_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn ca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque model-spec handle.
pub struct CaSpec {
    inner: ModelSpec,
}

/// Opaque bias-weights handle.
pub struct CaWeights {
    inner: BiasWeights,
}

/// Paired-comparison summary (means are home days per patient per period).
#[repr(C)]
#[derive(Clone, Copy)]
pub struct CaComparison {
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_diff: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub annual_gain_per_1000: f64,
}

/// Policy selector for `ca_compare`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum CaPolicy {
    None = 0,
    Myopic = 1,
    Adp = 2,
}

impl From<CaPolicy> for Policy {
    fn from(p: CaPolicy) -> Policy {
        match p {
            CaPolicy::None => Policy::None,
            CaPolicy::Myopic => Policy::Myopic,
            CaPolicy::Adp => Policy::Adp,
        }
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

/// Loads and validates a spec file (JSON). On success writes a handle to
/// `out`; the caller owns it and must call `ca_spec_free`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_spec_load(path: *const c_char, out: *mut *mut CaSpec) -> CaStatus {
    if out.is_null() {
        return CaStatus::InvalidArgument;
    }
    let Some(path) = cstr(path) else {
        set_error("path is null or not UTF-8".into());
        return CaStatus::InvalidArgument;
    };
    match ModelSpec::load(Path::new(path)) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CaSpec { inner }));
            CaStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CaStatus::ParseError
        }
    }
}

/// Parses a spec from a JSON string.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_spec_from_json(json: *const c_char, out: *mut *mut CaSpec) -> CaStatus {
    if out.is_null() {
        return CaStatus::InvalidArgument;
    }
    let Some(json) = cstr(json) else {
        set_error("json is null or not UTF-8".into());
        return CaStatus::InvalidArgument;
    };
    match ModelSpec::from_json(json) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CaSpec { inner }));
            CaStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CaStatus::ParseError
        }
    }
}

/// Generates a deterministic synthetic spec (same arguments, same spec).
///
/// # Safety
/// `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_spec_generate(
    seed: u64,
    p: usize,
    num_bases: usize,
    out: *mut *mut CaSpec,
) -> CaStatus {
    if out.is_null() || p == 0 || num_bases == 0 {
        set_error("p and num_bases must be at least 1".into());
        return CaStatus::InvalidArgument;
    }
    let inner = gen_synthetic(seed, p, num_bases);
    *out = Box::into_raw(Box::new(CaSpec { inner }));
    CaStatus::Ok
}

/// Covariate dimension of the spec.
///
/// # Safety
/// `spec` must be a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn ca_spec_dim(spec: *const CaSpec) -> usize {
    if spec.is_null() {
        return 0;
    }
    (*spec).inner.p
}

/// # Safety
/// `spec` must be null or a handle owned by the caller; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn ca_spec_free(spec: *mut CaSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Solves for bias weights: mortality threshold first, then row generation
/// at the given capacity ratio and tolerance.
///
/// # Safety
/// `spec` must be a live handle; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_solve(
    spec: *const CaSpec,
    capacity_ratio: f64,
    tol: f64,
    out: *mut *mut CaWeights,
) -> CaStatus {
    if spec.is_null() || out.is_null() || !(0.0..=1.0).contains(&capacity_ratio) || tol <= 0.0 {
        set_error("bad solve arguments".into());
        return CaStatus::InvalidArgument;
    }
    let spec = &(*spec).inner;
    let cand = CandidateSet::default_for(spec, &[]);
    let solved = adp::mortality_threshold(spec, &cand, capacity_ratio).and_then(|delta_star| {
        adp::row_generation(spec, &cand, delta_star, capacity_ratio, tol, adp::MAX_ROUNDS)
    });
    match solved {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(CaWeights { inner }));
            CaStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CaStatus::SolveError
        }
    }
}

/// Number of basis weights.
///
/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_len(weights: *const CaWeights) -> usize {
    if weights.is_null() {
        return 0;
    }
    (*weights).inner.w.len()
}

/// Reads basis weight `index` into `out`.
///
/// # Safety
/// `weights` must be a live handle; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_get(
    weights: *const CaWeights,
    index: usize,
    out: *mut f64,
) -> CaStatus {
    if weights.is_null() || out.is_null() {
        return CaStatus::InvalidArgument;
    }
    let w = &(*weights).inner.w;
    if index >= w.len() {
        return CaStatus::InvalidArgument;
    }
    *out = w[index];
    CaStatus::Ok
}

/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_lambda(weights: *const CaWeights) -> f64 {
    if weights.is_null() {
        return f64::NAN;
    }
    (*weights).inner.lambda
}

/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_objective(weights: *const CaWeights) -> f64 {
    if weights.is_null() {
        return f64::NAN;
    }
    (*weights).inner.objective
}

/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_delta_star(weights: *const CaWeights) -> f64 {
    if weights.is_null() {
        return f64::NAN;
    }
    (*weights).inner.delta_star
}

/// Equilibrium value rate of the untreated arm.
///
/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_zeta0(weights: *const CaWeights) -> f64 {
    if weights.is_null() {
        return f64::NAN;
    }
    (*weights).inner.zeta0
}

/// Equilibrium value rate of the treated arm.
///
/// # Safety
/// `weights` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_zeta1(weights: *const CaWeights) -> f64 {
    if weights.is_null() {
        return f64::NAN;
    }
    (*weights).inner.zeta1
}

/// # Safety
/// `weights` must be null or a handle owned by the caller; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn ca_weights_free(weights: *mut CaWeights) {
    if !weights.is_null() {
        drop(Box::from_raw(weights));
    }
}

/// Runs a paired comparison of two policies on identical noise streams and
/// writes the summary to `out`.
///
/// # Safety
/// `spec` must be a live handle; `out` must be non-null.
#[no_mangle]
pub unsafe extern "C" fn ca_compare(
    spec: *const CaSpec,
    n: usize,
    m: usize,
    horizon: usize,
    replications: usize,
    seed: u64,
    policy_a: CaPolicy,
    policy_b: CaPolicy,
    out: *mut CaComparison,
) -> CaStatus {
    if spec.is_null() || out.is_null() {
        return CaStatus::InvalidArgument;
    }
    let cfg = SimConfig {
        n,
        m,
        horizon,
        replications,
        base_seed: seed,
        ..SimConfig::default()
    };
    match paired_compare(&(*spec).inner, &cfg, &policy_a.into(), &policy_b.into()) {
        Ok(r) => {
            *out = CaComparison {
                mean_a: r.mean_a,
                mean_b: r.mean_b,
                mean_diff: r.mean_diff,
                t_statistic: r.t_statistic,
                p_value: r.p_value,
                annual_gain_per_1000: r.annual_gain_per_1000,
            };
            CaStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            CaStatus::SimError
        }
    }
}
