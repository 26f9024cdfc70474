//! C ABI for `smoothfix`.
//!
//! Every function returns an [`SfStatus`]. On failure a description of the
//! error is available from [`sf_last_error`] on the same thread until the next
//! call. Objects are opaque handles released with their `*_free` function;
//! strings returned by the library are released with [`sf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use smoothfix::analysis::{self, AlphaOptions, MomentSource, ReportOptions};
use smoothfix::popdyn::{self, RunOptions};
use smoothfix::{config, fourier, Error, SamplePool, WeightModel};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Runtime = 3,
    Panic = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SfComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for SfComplex {
    fn from(z: Complex64) -> Self {
        SfComplex { re: z.re, im: z.im }
    }
}

impl From<SfComplex> for Complex64 {
    fn from(z: SfComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Opaque weight model.
pub struct SfModel(WeightModel);

/// Opaque sample pool.
pub struct SfPool(SamplePool);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_validation() { SfStatus::InvalidArgument } else { SfStatus::Runtime };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            SfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a model from JSON such as `{"model": {"type": "polya", "b": 8}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out_model` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_model_from_json(json: *const c_char, out_model: *mut *mut SfModel) -> SfStatus {
    guard(|| {
        let out_model = out(out_model, "out_model")?;
        *out_model = ptr::null_mut();
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(SfStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let model = config::parse_model(text)?;
        *out_model = Box::into_raw(Box::new(SfModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`sf_model_from_json`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sf_model_free(model: *mut SfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `m(s) = E[Σ_j |T_j|^s]`: exact where available, otherwise a Monte Carlo mean
/// over `samples` draws with the given seed.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_model_moment(
    model: *const SfModel,
    s: f64,
    samples: usize,
    seed: u64,
    out_value: *mut f64,
    out_stderr: *mut f64,
) -> SfStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let out_value = out(out_value, "out_value")?;
        let est = analysis::estimate_m(&model.0, s, samples, &smoothfix::Streams::new(seed))?;
        *out_value = est.value;
        if let Some(se) = out_stderr.as_mut() {
            *se = est.stderr;
        }
        Ok(())
    })
}

/// Smallest root `α` of `m(α) = 1` in `(0, s_max]`. `*out_found` is 0 when `m`
/// stays below 1 on the whole interval, in which case `*out_alpha` is NaN.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_find_alpha(
    model: *const SfModel,
    s_max: f64,
    samples: usize,
    seed: u64,
    out_alpha: *mut f64,
    out_found: *mut i32,
) -> SfStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let out_alpha = out(out_alpha, "out_alpha")?;
        let out_found = out(out_found, "out_found")?;
        let opts = AlphaOptions { s_max, source: MomentSource::Auto { samples, seed }, ..AlphaOptions::default() };
        let root = analysis::find_alpha(&model.0, &opts)?;
        *out_alpha = root.map_or(f64::NAN, |r| r.alpha);
        *out_found = root.is_some() as i32;
        Ok(())
    })
}

/// Population dynamics: `iterations` applications of the smoothing transform to a
/// pool of `n` copies of `init`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_popdyn_run(
    model: *const SfModel,
    n: usize,
    iterations: usize,
    seed: u64,
    init: SfComplex,
    out_pool: *mut *mut SfPool,
) -> SfStatus {
    guard(|| {
        let out_pool = out(out_pool, "out_pool")?;
        *out_pool = ptr::null_mut();
        let model = deref(model, "model")?;
        let opts = RunOptions { init: init.into(), ..RunOptions::default() };
        let run = popdyn::run(&model.0, n, iterations, seed, &opts)?;
        *out_pool = Box::into_raw(Box::new(SfPool(run.pool)));
        Ok(())
    })
}

/// Builds a pool from `len` samples given as separate real and imaginary arrays.
///
/// # Safety
/// `re` and `im` must point to `len` readable values.
#[no_mangle]
pub unsafe extern "C" fn sf_pool_from_samples(
    re: *const f64,
    im: *const f64,
    len: usize,
    out_pool: *mut *mut SfPool,
) -> SfStatus {
    guard(|| {
        let out_pool = out(out_pool, "out_pool")?;
        *out_pool = ptr::null_mut();
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let (re, im) = (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len));
        let samples = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let pool = SamplePool::from_samples(samples, 0, 0, String::new())?;
        *out_pool = Box::into_raw(Box::new(SfPool(pool)));
        Ok(())
    })
}

/// Number of samples; 0 for a null handle.
///
/// # Safety
/// `pool` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sf_pool_len(pool: *const SfPool) -> usize {
    pool.as_ref().map_or(0, |p| p.0.len())
}

/// Copies the samples into `re` and `im`, which must each hold `capacity`
/// values with `capacity >= sf_pool_len(pool)`.
///
/// # Safety
/// `re` and `im` must point to `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn sf_pool_copy(pool: *const SfPool, re: *mut f64, im: *mut f64, capacity: usize) -> SfStatus {
    guard(|| {
        let pool = deref(pool, "pool")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let samples = pool.0.samples();
        if capacity < samples.len() {
            return Err(Failure(
                SfStatus::InvalidArgument,
                format!("capacity {capacity} < pool length {}", samples.len()),
            ));
        }
        let (re, im) = (std::slice::from_raw_parts_mut(re, capacity), std::slice::from_raw_parts_mut(im, capacity));
        for (k, z) in samples.iter().enumerate() {
            re[k] = z.re;
            im[k] = z.im;
        }
        Ok(())
    })
}

/// # Safety
/// `pool` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sf_pool_free(pool: *mut SfPool) {
    if !pool.is_null() {
        drop(Box::from_raw(pool));
    }
}

/// Empirical characteristic function `φ̂(ξ) = (1/n) Σ_k exp(-i(ξ₁ Re Z_k + ξ₂ Im Z_k))`.
///
/// # Safety
/// Pointers must be valid; `out_stderr` may be null.
#[no_mangle]
pub unsafe extern "C" fn sf_ecf(
    pool: *const SfPool,
    xi: SfComplex,
    out_value: *mut SfComplex,
    out_stderr: *mut f64,
) -> SfStatus {
    guard(|| {
        let pool = deref(pool, "pool")?;
        let out_value = out(out_value, "out_value")?;
        let v = fourier::ecf(pool.0.samples(), xi.into());
        *out_value = v.value.into();
        if let Some(se) = out_stderr.as_mut() {
            *se = v.stderr;
        }
        Ok(())
    })
}

/// Assumption report as a JSON document, with `samples` Monte Carlo draws and
/// default options otherwise. Release the result with [`sf_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_analyze_json(
    model: *const SfModel,
    samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> SfStatus {
    guard(|| {
        let out_json = out(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let model = deref(model, "model")?;
        let opts = ReportOptions { samples, seed, ..ReportOptions::default() };
        let report = analysis::check_assumptions(&model.0, &opts)?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| Failure(SfStatus::Runtime, e.to_string()))?;
        *out_json = CString::new(text).map_err(|e| Failure(SfStatus::Runtime, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
