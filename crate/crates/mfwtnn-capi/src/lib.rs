//! C interface to the restoration library: opaque handles, integer status
//! codes, and a thread-local error message. The generated header lives in
//! `include/mfwtnn.h`.
//!
//! Conventions:
//! - every pointer the library hands out is owned by the caller and must be
//!   released with the matching `_free` function;
//! - functions returning a pointer signal failure with NULL, functions
//!   returning [`mfwtnn_status`] signal it with a nonzero code; either way
//!   `mfwtnn_last_error` holds the message for the calling thread;
//! - cube payloads cross the boundary tube-major (third index fastest),
//!   matching the on-disk layout.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use mfwtnn::io;
use mfwtnn::metrics;
use mfwtnn::noise;
use mfwtnn::solver::{self, DenoiseResult, SolverConfig};
use mfwtnn::tensor3::Cube;
use mfwtnn::Error;

/// Outcome of a C-interface call. `MFWTNN_OK` is zero; everything else is a
/// failure whose text is available via `mfwtnn_last_error`.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum mfwtnn_status {
    MFWTNN_OK = 0,
    MFWTNN_NULL_ARGUMENT = 1,
    MFWTNN_INVALID_ARGUMENT = 2,
    MFWTNN_DIM_MISMATCH = 3,
    MFWTNN_SYMMETRY = 4,
    MFWTNN_NUMERIC = 5,
    MFWTNN_CONFIG = 6,
    MFWTNN_FORMAT = 7,
    MFWTNN_ALREADY_EXISTS = 8,
    MFWTNN_IO = 9,
    MFWTNN_BAD_UTF8 = 10,
    MFWTNN_PANIC = 11,
}

/// Opaque real third-order tensor.
pub struct mfwtnn_cube {
    inner: Cube,
}

/// Opaque solver configuration.
pub struct mfwtnn_config {
    inner: SolverConfig,
}

/// Opaque restoration outcome holding the three estimated components.
pub struct mfwtnn_result {
    inner: DenoiseResult,
}

/// The four quality scores, in the order the CLI prints them.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct mfwtnn_metrics {
    pub mpsnr: f64,
    pub mssim: f64,
    pub ergas: f64,
    pub msam: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = owned);
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::default());
}

fn code_of(e: &Error) -> mfwtnn_status {
    match e {
        Error::InvalidArgument(_) => mfwtnn_status::MFWTNN_INVALID_ARGUMENT,
        Error::DimMismatch(_) => mfwtnn_status::MFWTNN_DIM_MISMATCH,
        Error::Symmetry(_) => mfwtnn_status::MFWTNN_SYMMETRY,
        Error::Numeric(_) => mfwtnn_status::MFWTNN_NUMERIC,
        Error::Config(_) => mfwtnn_status::MFWTNN_CONFIG,
        Error::Format { .. } => mfwtnn_status::MFWTNN_FORMAT,
        Error::AlreadyExists(_) => mfwtnn_status::MFWTNN_ALREADY_EXISTS,
        Error::Io { .. } => mfwtnn_status::MFWTNN_IO,
    }
}

fn fail(e: &Error) -> mfwtnn_status {
    remember(&e.to_string());
    code_of(e)
}

fn null_argument(what: &str) -> mfwtnn_status {
    remember(&format!("{what} must not be NULL"));
    mfwtnn_status::MFWTNN_NULL_ARGUMENT
}

/// Runs a fallible body, turning panics into `MFWTNN_PANIC` instead of
/// letting them unwind across the C boundary.
fn guarded_status(f: impl FnOnce() -> mfwtnn_status) -> mfwtnn_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            remember("internal panic");
            mfwtnn_status::MFWTNN_PANIC
        }
    }
}

fn guarded_ptr<T>(f: impl FnOnce() -> Option<Box<T>>) -> *mut T {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Some(boxed)) => Box::into_raw(boxed),
        Ok(None) => std::ptr::null_mut(),
        Err(_) => {
            remember("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `p` must be NULL or a NUL-terminated string valid for reads.
unsafe fn cstr<'a>(p: *const c_char, what: &str) -> Result<&'a str, mfwtnn_status> {
    if p.is_null() {
        return Err(null_argument(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        remember(&format!("{what} is not valid UTF-8"));
        mfwtnn_status::MFWTNN_BAD_UTF8
    })
}

unsafe fn cube_ref<'a>(p: *const mfwtnn_cube, what: &str) -> Result<&'a Cube, mfwtnn_status> {
    if p.is_null() {
        return Err(null_argument(what));
    }
    Ok(&(*p).inner)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mfwtnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the calling thread's last error message into `buf` (truncating if
/// needed, always NUL-terminated when `cap > 0`) and returns the length of
/// the full message in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must be NULL or valid for writes of `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a cube from `values`, tube-major, length `n1 * n2 * n3`. A NULL
/// `values` gives an all-zero cube. Returns NULL on failure.
///
/// # Safety
/// `values` must be NULL or valid for reads of `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_new(
    n1: usize,
    n2: usize,
    n3: usize,
    values: *const f64,
    len: usize,
) -> *mut mfwtnn_cube {
    guarded_ptr(move || {
        let built = if values.is_null() {
            Cube::zeros((n1, n2, n3))
        } else if len != n1.saturating_mul(n2).saturating_mul(n3) {
            Err(Error::DimMismatch(format!(
                "{n1}x{n2}x{n3} cube needs {} values, got {len}",
                n1.saturating_mul(n2).saturating_mul(n3)
            )))
        } else {
            Cube::from_vec((n1, n2, n3), std::slice::from_raw_parts(values, len).to_vec())
        };
        match built {
            Ok(inner) => {
                clear_error();
                Some(Box::new(mfwtnn_cube { inner }))
            }
            Err(e) => {
                fail(&e);
                None
            }
        }
    })
}

/// Reads a cube file. Returns NULL on failure.
///
/// # Safety
/// `path` must be a NUL-terminated string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_load(path: *const c_char) -> *mut mfwtnn_cube {
    guarded_ptr(move || {
        let path = match cstr(path, "path") {
            Ok(p) => p,
            Err(_) => return None,
        };
        match io::load_cube(Path::new(path)) {
            Ok(inner) => {
                clear_error();
                Some(Box::new(mfwtnn_cube { inner }))
            }
            Err(e) => {
                fail(&e);
                None
            }
        }
    })
}

/// Writes a cube file (doubles, little endian). Refuses to replace an
/// existing file unless `force` is set.
///
/// # Safety
/// `cube` must be a live handle from this library; `path` must be a
/// NUL-terminated string valid for reads.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_save(
    cube: *const mfwtnn_cube,
    path: *const c_char,
    force: bool,
) -> mfwtnn_status {
    guarded_status(move || {
        let cube = match cube_ref(cube, "cube") {
            Ok(c) => c,
            Err(s) => return s,
        };
        let path = match cstr(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match io::save_cube(cube, Path::new(path), io::Scalar::F64, force) {
            Ok(()) => {
                clear_error();
                mfwtnn_status::MFWTNN_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Reports the cube's dimensions.
///
/// # Safety
/// `cube` must be a live handle; `n1`, `n2`, `n3` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_dims(
    cube: *const mfwtnn_cube,
    n1: *mut usize,
    n2: *mut usize,
    n3: *mut usize,
) -> mfwtnn_status {
    guarded_status(move || {
        let cube = match cube_ref(cube, "cube") {
            Ok(c) => c,
            Err(s) => return s,
        };
        if n1.is_null() || n2.is_null() || n3.is_null() {
            return null_argument("dimension output");
        }
        let d = cube.dims();
        *n1 = d.0;
        *n2 = d.1;
        *n3 = d.2;
        clear_error();
        mfwtnn_status::MFWTNN_OK
    })
}

/// Number of scalars in the cube.
///
/// # Safety
/// `cube` must be NULL (returns 0) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_len(cube: *const mfwtnn_cube) -> usize {
    if cube.is_null() {
        return 0;
    }
    let d = (*cube).inner.dims();
    d.0 * d.1 * d.2
}

/// Copies the cube's values into `out`, tube-major. `len` must equal
/// `mfwtnn_cube_len(cube)`.
///
/// # Safety
/// `cube` must be a live handle; `out` must be valid for writes of `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_copy_data(
    cube: *const mfwtnn_cube,
    out: *mut f64,
    len: usize,
) -> mfwtnn_status {
    guarded_status(move || {
        let cube = match cube_ref(cube, "cube") {
            Ok(c) => c,
            Err(s) => return s,
        };
        if out.is_null() {
            return null_argument("out");
        }
        let d = cube.dims();
        let need = d.0 * d.1 * d.2;
        if len != need {
            remember(&format!("out holds {len} values, cube has {need}"));
            return mfwtnn_status::MFWTNN_DIM_MISMATCH;
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, s) in dst.iter_mut().zip(cube.data.iter()) {
            *d = *s;
        }
        clear_error();
        mfwtnn_status::MFWTNN_OK
    })
}

/// Releases a cube handle. NULL is a no-op.
///
/// # Safety
/// `cube` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_cube_free(cube: *mut mfwtnn_cube) {
    if !cube.is_null() {
        drop(Box::from_raw(cube));
    }
}

/// Fresh configuration with the library defaults.
#[no_mangle]
pub extern "C" fn mfwtnn_config_new() -> *mut mfwtnn_config {
    guarded_ptr(|| {
        clear_error();
        Some(Box::new(mfwtnn_config {
            inner: SolverConfig::default(),
        }))
    })
}

/// Sets one configuration entry by key, with the same keys and value syntax
/// as the config file format (e.g. "model", "alpha", "lambda", "mu0").
///
/// # Safety
/// `config` must be a live handle; `key` and `value` must be NUL-terminated
/// strings valid for reads.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_config_set(
    config: *mut mfwtnn_config,
    key: *const c_char,
    value: *const c_char,
) -> mfwtnn_status {
    guarded_status(move || {
        if config.is_null() {
            return null_argument("config");
        }
        let key = match cstr(key, "key") {
            Ok(k) => k,
            Err(s) => return s,
        };
        let value = match cstr(value, "value") {
            Ok(v) => v,
            Err(s) => return s,
        };
        match io::apply_solver_kv(&mut (*config).inner, key, value) {
            Ok(()) => {
                clear_error();
                mfwtnn_status::MFWTNN_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a configuration handle. NULL is a no-op.
///
/// # Safety
/// `config` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_config_free(config: *mut mfwtnn_config) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Corrupts a clean cube with one of the preset degradation cases (1..=8).
/// Returns NULL on failure.
///
/// # Safety
/// `clean` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_simulate_case(
    clean: *const mfwtnn_cube,
    case_id: u8,
    seed: u64,
) -> *mut mfwtnn_cube {
    guarded_ptr(move || {
        let clean = match cube_ref(clean, "clean") {
            Ok(c) => c,
            Err(_) => return None,
        };
        match noise::make_case(clean, case_id, seed) {
            Ok((noisy, _)) => {
                clear_error();
                Some(Box::new(mfwtnn_cube { inner: noisy }))
            }
            Err(e) => {
                fail(&e);
                None
            }
        }
    })
}

/// Runs the solver. A NULL `config` means defaults. Returns NULL on failure.
///
/// # Safety
/// `noisy` must be a live cube handle; `config` must be NULL or a live
/// configuration handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_denoise(
    noisy: *const mfwtnn_cube,
    config: *const mfwtnn_config,
) -> *mut mfwtnn_result {
    guarded_ptr(move || {
        let noisy = match cube_ref(noisy, "noisy") {
            Ok(c) => c,
            Err(_) => return None,
        };
        let defaults;
        let config = if config.is_null() {
            defaults = SolverConfig::default();
            &defaults
        } else {
            &(*config).inner
        };
        match solver::denoise(noisy, config) {
            Ok(inner) => {
                clear_error();
                Some(Box::new(mfwtnn_result { inner }))
            }
            Err(e) => {
                fail(&e);
                None
            }
        }
    })
}

fn result_component(
    result: *const mfwtnn_result,
    pick: impl Fn(&DenoiseResult) -> &Cube,
) -> *mut mfwtnn_cube {
    guarded_ptr(move || {
        if result.is_null() {
            null_argument("result");
            return None;
        }
        let inner = unsafe { &(*result).inner };
        clear_error();
        Some(Box::new(mfwtnn_cube {
            inner: pick(inner).clone(),
        }))
    })
}

/// Copy of the restored cube. The caller owns the returned handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_x(result: *const mfwtnn_result) -> *mut mfwtnn_cube {
    result_component(result, |r| &r.x)
}

/// Copy of the sparse component. The caller owns the returned handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_s(result: *const mfwtnn_result) -> *mut mfwtnn_cube {
    result_component(result, |r| &r.s)
}

/// Copy of the dense-noise component. The caller owns the returned handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_n(result: *const mfwtnn_result) -> *mut mfwtnn_cube {
    result_component(result, |r| &r.n)
}

/// Number of sweeps the solver ran. Zero when `result` is NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_iterations(result: *const mfwtnn_result) -> usize {
    if result.is_null() {
        return 0;
    }
    (*result).inner.iterations
}

/// Whether the solver met its tolerance before the iteration cap.
///
/// # Safety
/// `result` must be NULL (returns false) or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_converged(result: *const mfwtnn_result) -> bool {
    if result.is_null() {
        return false;
    }
    (*result).inner.converged
}

/// Releases a result handle. NULL is a no-op.
///
/// # Safety
/// `result` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_result_free(result: *mut mfwtnn_result) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Scores `estimate` against `reference` and fills `out`.
///
/// # Safety
/// `reference` and `estimate` must be live handles; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn mfwtnn_metrics_compute(
    reference: *const mfwtnn_cube,
    estimate: *const mfwtnn_cube,
    out: *mut mfwtnn_metrics,
) -> mfwtnn_status {
    guarded_status(move || {
        let reference = match cube_ref(reference, "reference") {
            Ok(c) => c,
            Err(s) => return s,
        };
        let estimate = match cube_ref(estimate, "estimate") {
            Ok(c) => c,
            Err(s) => return s,
        };
        if out.is_null() {
            return null_argument("out");
        }
        match metrics::evaluate(reference, estimate) {
            Ok(report) => {
                *out = mfwtnn_metrics {
                    mpsnr: report.mpsnr,
                    mssim: report.mssim,
                    ergas: report.ergas,
                    msam: report.msam,
                };
                clear_error();
                mfwtnn_status::MFWTNN_OK
            }
            Err(e) => fail(&e),
        }
    })
}
