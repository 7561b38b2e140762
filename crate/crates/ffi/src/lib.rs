//! C ABI over the core library: opaque handles, integer error codes, and a
//! thread-local last-error message. The companion header lives at
//! `include/fleb.h`.
//!
//! Conventions:
//! - every function returns `FLEB_OK` (0) or a negative error code;
//! - results are written through out-pointers;
//! - handles are created and released by this library only;
//! - `fleb_last_error` describes the most recent failure on this thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_ulonglong, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fleb_core::config::ExperimentConfig;
use fleb_core::grid::{AnalyticSignal, GridFunction, SpectralGrid};
use fleb_core::norms::NormSpec;
use fleb_core::report::{payload_bytes, run};
use fleb_core::Error;

pub const FLEB_OK: i32 = 0;
pub const FLEB_ERR_NULL: i32 = -1;
pub const FLEB_ERR_VALIDATION: i32 = -2;
pub const FLEB_ERR_RESOLUTION: i32 = -3;
pub const FLEB_ERR_IO: i32 = -4;
pub const FLEB_ERR_PANIC: i32 = -5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(sanitized).unwrap());
}

fn code_of(err: &Error) -> i32 {
    match err.exit_code() {
        3 => FLEB_ERR_RESOLUTION,
        4 => FLEB_ERR_IO,
        _ => FLEB_ERR_VALIDATION,
    }
}

fn fail(err: Error) -> i32 {
    set_error(&err.to_string());
    code_of(&err)
}

fn guarded(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            FLEB_ERR_PANIC
        }
    }
}

/// Opaque grid handle.
pub struct FlebGrid(SpectralGrid);

/// Opaque grid-function handle.
pub struct FlebFunction(GridFunction);

/// Copy the most recent error message (NUL-terminated, truncated to `len`).
///
/// # Safety
/// `buf` must point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fleb_last_error(buf: *mut c_char, len: usize) -> i32 {
    if buf.is_null() || len == 0 {
        return FLEB_ERR_NULL;
    }
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        let n = bytes.len().min(len);
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
        // always NUL-terminate, even when truncating
        *buf.add(n - 1) = 0;
    });
    FLEB_OK
}

/// Create a periodic grid: `dim` in 1..=3, box edge `extent`, `points` per
/// axis (a power of two, at least 8).
///
/// # Safety
/// `out` must be a valid pointer; the handle must be released with
/// [`fleb_grid_free`].
#[no_mangle]
pub unsafe extern "C" fn fleb_grid_new(
    dim: usize,
    extent: c_double,
    points: usize,
    out: *mut *mut FlebGrid,
) -> i32 {
    if out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| match SpectralGrid::new(dim, extent, points) {
        Ok(grid) => {
            *out = Box::into_raw(Box::new(FlebGrid(grid)));
            FLEB_OK
        }
        Err(e) => fail(e),
    })
}

/// Release a grid handle. Null is ignored.
///
/// # Safety
/// `grid` must have come from [`fleb_grid_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fleb_grid_free(grid: *mut FlebGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Sample a centered Gaussian `e^{-|x|^2/(2 width^2)}` on the grid.
///
/// # Safety
/// `grid` and `out` must be valid; the handle must be released with
/// [`fleb_function_free`].
#[no_mangle]
pub unsafe extern "C" fn fleb_gaussian_new(
    grid: *const FlebGrid,
    width: c_double,
    out: *mut *mut FlebFunction,
) -> i32 {
    if grid.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| {
        let g = &(*grid).0;
        let signal = AnalyticSignal::Gaussian {
            center: vec![0.0; g.dim()],
            width,
            modulation: vec![0.0; g.dim()],
        };
        match signal.materialize(g) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(FlebFunction(f)));
                FLEB_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a function handle. Null is ignored.
///
/// # Safety
/// `f` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fleb_function_free(f: *mut FlebFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Free Schrödinger evolution `U(t) f` as a new handle.
///
/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fleb_propagate(
    f: *const FlebFunction,
    t: c_double,
    out: *mut *mut FlebFunction,
) -> i32 {
    if f.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| match (*f).0.propagate(t) {
        Ok(u) => {
            *out = Box::into_raw(Box::new(FlebFunction(u)));
            FLEB_OK
        }
        Err(e) => fail(e),
    })
}

/// Cell-weighted L^2 norm.
///
/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fleb_l2_norm(f: *const FlebFunction, out: *mut c_double) -> i32 {
    if f.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| {
        *out = (*f).0.l2_norm();
        FLEB_OK
    })
}

/// Relative L^2 distance between two functions on the same grid.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fleb_relative_l2_error(
    a: *const FlebFunction,
    b: *const FlebFunction,
    out: *mut c_double,
) -> i32 {
    if a.is_null() || b.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| {
        let fa = &(*a).0;
        let fb = &(*b).0;
        if fa.grid() != fb.grid() || fa.space() != fb.space() {
            set_error("functions must share grid and representation");
            return FLEB_ERR_VALIDATION;
        }
        *out = fa.relative_l2_error(fb);
        FLEB_OK
    })
}

/// Fourier-Lebesgue norm with regularity `s` and exponent `r >= 2`.
///
/// # Safety
/// `f` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fleb_fourier_lebesgue_norm(
    f: *const FlebFunction,
    s: c_double,
    r: c_double,
    out: *mut c_double,
) -> i32 {
    if f.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| {
        let spec = match NormSpec::new(s, r) {
            Ok(spec) => spec,
            Err(e) => return fail(e),
        };
        match fleb_core::norms::fourier_lebesgue_norm(&(*f).0, &spec) {
            Ok(v) => {
                *out = v;
                FLEB_OK
            }
            Err(e) => fail(e),
        }
    })
}

/// Run an experiment from a JSON config (same schema as the CLI) and return
/// the JSON results payload as a NUL-terminated string. Free the string with
/// [`fleb_string_free`]. `seed_override` replaces the config seed when
/// `has_seed_override` is nonzero.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fleb_run_experiment(
    config_json: *const c_char,
    has_seed_override: i32,
    seed_override: c_ulonglong,
    out: *mut *mut c_char,
) -> i32 {
    if config_json.is_null() || out.is_null() {
        return FLEB_ERR_NULL;
    }
    guarded(|| {
        let text = match std::ffi::CStr::from_ptr(config_json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("config is not valid UTF-8");
                return FLEB_ERR_VALIDATION;
            }
        };
        let mut config = match ExperimentConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        if has_seed_override != 0 {
            config.set_seed(seed_override);
        }
        let payload = match run(&config).and_then(|r| payload_bytes(&r)) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        match CString::new(payload) {
            Ok(s) => {
                *out = s.into_raw();
                FLEB_OK
            }
            Err(_) => {
                set_error("payload contains interior NUL");
                FLEB_ERR_VALIDATION
            }
        }
    })
}

/// Release a string returned by [`fleb_run_experiment`]. Null is ignored.
///
/// # Safety
/// `s` must have come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fleb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
