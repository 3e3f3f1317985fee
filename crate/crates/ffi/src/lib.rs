//! C ABI over the erasure-channel bound evaluators.
//!
//! Conventions:
//! - Every fallible call returns an [`EcvStatus`]; outputs go through
//!   pointers that are written only on `ECV_STATUS_OK`.
//! - Code states are opaque [`EcvState`] handles created by `ecv_state_*`
//!   constructors and released with [`ecv_state_free`].
//! - On failure a thread-local message is retained; fetch it with
//!   [`ecv_last_error_message`].
//!
//! The matching header `include/erasure_converse.h` is generated by cbindgen
//! at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use erasure_converse::bounds::{
    classical_success_bound, expected_fidelity_bound, fidelity_upper_bound, levy_tail,
    optimize_exponent, CodeParams, ConstantEstimates,
};
use erasure_converse::ensemble::estimate_opnorm_constant;
use erasure_converse::erasure::{classical_capacity, quantum_capacity, ErasureParams};
use erasure_converse::error::Error;
use erasure_converse::oracle::optimal_code_fidelity;
use erasure_converse::states::{haar_random_pure, state_from_json, PureState, SubsystemLayout};

/// Status codes returned by every fallible entry point.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GuardExceeded = 3,
    NumericFailure = 4,
    IoError = 5,
    InvalidUtf8 = 6,
}

/// Opaque handle to a pure code state.
pub struct EcvState {
    inner: PureState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> EcvStatus {
    match err {
        Error::Argument(_) | Error::Invariant(_) | Error::Format(_) => EcvStatus::InvalidArgument,
        Error::Resource { .. } => EcvStatus::GuardExceeded,
        Error::Numeric(_) | Error::SdpStalled { .. } => EcvStatus::NumericFailure,
        Error::Io(_) => EcvStatus::IoError,
    }
}

fn run(body: impl FnOnce() -> Result<(), EcvStatus> + std::panic::UnwindSafe) -> EcvStatus {
    match catch_unwind(body) {
        Ok(Ok(())) => EcvStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            EcvStatus::NumericFailure
        }
    }
}

fn fail(err: Error) -> EcvStatus {
    set_error(&err.to_string());
    status_of(&err)
}

unsafe fn write_out<T>(ptr: *mut T, value: T) -> Result<(), EcvStatus> {
    if ptr.is_null() {
        set_error("null output pointer");
        return Err(EcvStatus::NullPointer);
    }
    unsafe { ptr.write(value) };
    Ok(())
}

unsafe fn state_ref<'a>(ptr: *const EcvState) -> Result<&'a PureState, EcvStatus> {
    if ptr.is_null() {
        set_error("null state handle");
        return Err(EcvStatus::NullPointer);
    }
    Ok(unsafe { &(*ptr).inner })
}

/// Derive code and channel parameters from a state laid out as [M, d, .., d].
fn code_of(state: &PureState, p: f64) -> Result<(CodeParams, ErasureParams), EcvStatus> {
    let dims = state.layout().dims();
    if dims.len() < 2 {
        set_error("state is not a code state [M, d, ..., d]");
        return Err(EcvStatus::InvalidArgument);
    }
    let d = dims[1];
    if dims[1..].iter().any(|&x| x != d) {
        set_error("state channel factors are not all equal");
        return Err(EcvStatus::InvalidArgument);
    }
    let n = dims.len() - 1;
    let code = CodeParams::from_m(n, dims[0] as u64).map_err(fail)?;
    let params = ErasureParams::new(p, d).map_err(fail)?;
    Ok((code, params))
}

/// Version string of the underlying crate; static storage, do not free.
#[no_mangle]
pub extern "C" fn ecv_version() -> *const c_char {
    concat!("erasure-converse ", env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message on this thread into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes (or be NULL to query
/// the length only).
#[no_mangle]
pub unsafe extern "C" fn ecv_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                buf.add(n).write(0);
            }
        }
        bytes.len()
    })
}

/// Sample a Haar-random pure state on the given subsystem dimensions.
///
/// # Safety
/// `dims` must point to `ndims` readable u32 values; `out` must be a valid
/// location for a handle pointer. The handle must be released with
/// [`ecv_state_free`].
#[no_mangle]
pub unsafe extern "C" fn ecv_state_haar(
    dims: *const u32,
    ndims: usize,
    seed: u64,
    out: *mut *mut EcvState,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        if dims.is_null() {
            set_error("null dims pointer");
            return Err(EcvStatus::NullPointer);
        }
        let dims: Vec<usize> = unsafe { std::slice::from_raw_parts(dims, ndims) }
            .iter()
            .map(|&d| d as usize)
            .collect();
        let layout = SubsystemLayout::new(dims).map_err(fail)?;
        let state = haar_random_pure(&layout, seed);
        unsafe { write_out(out, Box::into_raw(Box::new(EcvState { inner: state }))) }
    }))
}

/// Parse a state from the JSON state-file format
/// `{"dims": [...], "re": [...], "im": [...]}` given as a NUL-terminated
/// string.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` as in
/// [`ecv_state_haar`].
#[no_mangle]
pub unsafe extern "C" fn ecv_state_parse_json(
    text: *const c_char,
    out: *mut *mut EcvState,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        if text.is_null() {
            set_error("null text pointer");
            return Err(EcvStatus::NullPointer);
        }
        let text = unsafe { CStr::from_ptr(text) }.to_str().map_err(|_| {
            set_error("state text is not valid UTF-8");
            EcvStatus::InvalidUtf8
        })?;
        let state = state_from_json(text).map_err(fail)?;
        unsafe { write_out(out, Box::into_raw(Box::new(EcvState { inner: state }))) }
    }))
}

/// Load a state from a JSON state file on disk.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` as in
/// [`ecv_state_haar`].
#[no_mangle]
pub unsafe extern "C" fn ecv_state_load_json(
    path: *const c_char,
    out: *mut *mut EcvState,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        if path.is_null() {
            set_error("null path pointer");
            return Err(EcvStatus::NullPointer);
        }
        let path = unsafe { CStr::from_ptr(path) }.to_str().map_err(|_| {
            set_error("path is not valid UTF-8");
            EcvStatus::InvalidUtf8
        })?;
        let text = std::fs::read_to_string(path).map_err(|e| fail(Error::Io(e)))?;
        let state = state_from_json(&text).map_err(fail)?;
        unsafe { write_out(out, Box::into_raw(Box::new(EcvState { inner: state }))) }
    }))
}

/// Release a state handle. Passing NULL is a no-op.
///
/// # Safety
/// `state` must be a handle produced by this library, released once.
#[no_mangle]
pub unsafe extern "C" fn ecv_state_free(state: *mut EcvState) {
    if !state.is_null() {
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Total Hilbert-space dimension of the state.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_state_total_dim(state: *const EcvState, out: *mut usize) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let s = unsafe { state_ref(state) }?;
        unsafe { write_out(out, s.layout().total()) }
    }))
}

/// Per-code fidelity bound for a code state [M, d, ..., d] at erasure
/// probability `p` and Rényi order `alpha`; writes the clamped bound and the
/// signed rate-difference exponent.
///
/// # Safety
/// `state` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_fidelity_bound(
    state: *const EcvState,
    p: f64,
    alpha: f64,
    value: *mut f64,
    exponent: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let s = unsafe { state_ref(state) }?;
        let (code, params) = code_of(s, p)?;
        let report = fidelity_upper_bound(s, &code, &params, alpha).map_err(fail)?;
        unsafe {
            write_out(value, report.value)?;
            write_out(exponent, report.exponent)
        }
    }))
}

/// Exact optimal decoder fidelity of the code state via the per-branch SDP
/// (guards: n <= 3, d = 2, M <= 8).
///
/// # Safety
/// As in [`ecv_fidelity_bound`].
#[no_mangle]
pub unsafe extern "C" fn ecv_oracle_fidelity(
    state: *const EcvState,
    p: f64,
    tol: f64,
    out: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let s = unsafe { state_ref(state) }?;
        let (code, params) = code_of(s, p)?;
        let f = optimal_code_fidelity(s, &code, &params, tol).map_err(fail)?;
        unsafe { write_out(out, f) }
    }))
}

/// Haar-ensemble expected-fidelity bound at the given parameters.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_expected_fidelity_bound(
    n: u32,
    d: u32,
    p: f64,
    rate: f64,
    alpha: f64,
    opnorm_c: f64,
    value: *mut f64,
    exponent: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let code = CodeParams::new(n as usize, rate).map_err(fail)?;
        let params = ErasureParams::new(p, d as usize).map_err(fail)?;
        let consts = ConstantEstimates::new(opnorm_c, 1.0).map_err(fail)?;
        let report = expected_fidelity_bound(&code, &params, alpha, &consts).map_err(fail)?;
        unsafe {
            write_out(value, report.value)?;
            write_out(exponent, report.exponent)
        }
    }))
}

/// Optimize the strong-converse exponent over the alpha grid.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_optimize_exponent(
    n: u32,
    d: u32,
    p: f64,
    rate: f64,
    opnorm_c: f64,
    grid_size: u32,
    best_alpha: *mut f64,
    best_exponent: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let code = CodeParams::new(n as usize, rate).map_err(fail)?;
        let params = ErasureParams::new(p, d as usize).map_err(fail)?;
        let consts = ConstantEstimates::new(opnorm_c, 1.0).map_err(fail)?;
        let profile =
            optimize_exponent(&code, &params, &consts, grid_size as usize).map_err(fail)?;
        unsafe {
            write_out(best_alpha, profile.best_alpha)?;
            write_out(best_exponent, profile.best_exponent)
        }
    }))
}

/// Classical success-probability bound.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_classical_success_bound(
    n: u32,
    d: u32,
    p: f64,
    rate: f64,
    alpha: f64,
    out: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let code = CodeParams::new(n as usize, rate).map_err(fail)?;
        let params = ErasureParams::new(p, d as usize).map_err(fail)?;
        let report = classical_success_bound(&code, &params, alpha).map_err(fail)?;
        unsafe { write_out(out, report.value) }
    }))
}

/// Quantum capacity max(0, (1-2p) log2 d) in bits per use.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_quantum_capacity(p: f64, d: u32, out: *mut f64) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let params = ErasureParams::new(p, d as usize).map_err(fail)?;
        unsafe { write_out(out, quantum_capacity(&params)) }
    }))
}

/// Classical capacity (1-p) log2 d in bits per use.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_classical_capacity(p: f64, d: u32, out: *mut f64) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let params = ErasureParams::new(p, d as usize).map_err(fail)?;
        unsafe { write_out(out, classical_capacity(&params)) }
    }))
}

/// Levy tail bound at deviation `delta` (must be in [0, 2]).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_levy_tail(
    n: u32,
    d: u32,
    rate: f64,
    delta: f64,
    levy_c: f64,
    out: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let code = CodeParams::new(n as usize, rate).map_err(fail)?;
        let consts = ConstantEstimates::new(1.0, levy_c).map_err(fail)?;
        let tail = levy_tail(&code, d as usize, delta, &consts).map_err(fail)?;
        unsafe { write_out(out, tail) }
    }))
}

/// Empirical operator-norm constant: d_R times the mean largest marginal
/// eigenvalue over `trials` Haar states on d_R (x) d_S.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ecv_estimate_opnorm_constant(
    d_r: u32,
    d_s: u32,
    trials: u64,
    seed: u64,
    out: *mut f64,
) -> EcvStatus {
    run(AssertUnwindSafe(|| {
        let est = estimate_opnorm_constant(d_r as usize, d_s as usize, trials as usize, seed)
            .map_err(fail)?;
        unsafe { write_out(out, est) }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_is_static_cstring() {
        let v = unsafe { CStr::from_ptr(ecv_version()) };
        assert!(v.to_str().unwrap().starts_with("erasure-converse"));
    }
}
