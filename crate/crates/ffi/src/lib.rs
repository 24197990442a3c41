//! C ABI over `eva-core`.
//!
//! Every function returns an [`EvaStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`eva_last_error_message`]. Fits are opaque [`EvaFit`] handles released
//! with [`eva_fit_free`].

use eva_core::aep::{aep_with_uncertainty, return_level};
use eva_core::distributions::GevParams;
use eva_core::error::Error;
use eva_core::fitting::{fit_gev, fit_pot, FitResult, OptimizerSettings};
use eva_core::threshold::build_schedule;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InsufficientData = 3,
    NotConverged = 4,
    /// The fit has no usable covariance matrix.
    NoCovariance = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Opaque fitted model.
pub struct EvaFit {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> EvaStatus {
    match e {
        Error::InsufficientData { .. } | Error::EmptyInput => EvaStatus::InsufficientData,
        Error::NotConverged => EvaStatus::NotConverged,
        _ => EvaStatus::InvalidArgument,
    }
}

fn fail(status: EvaStatus, msg: impl Into<String>) -> EvaStatus {
    set_error(msg);
    status
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), EvaStatus>) -> EvaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(EvaStatus::Internal, "internal panic"),
    }
}

fn lift<T>(r: eva_core::Result<T>) -> Result<T, EvaStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn nonnull<T>(p: *const T, name: &str) -> Result<(), EvaStatus> {
    if p.is_null() {
        Err(fail(EvaStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `data` must point to `n` readable doubles (or be null when `n == 0`).
unsafe fn slice<'a>(data: *const f64, n: usize, name: &str) -> Result<&'a [f64], EvaStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    nonnull(data, name)?;
    Ok(std::slice::from_raw_parts(data, n))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn eva_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// GEV distribution function at `x`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn eva_gev_cdf(mu: f64, sigma: f64, xi: f64, x: f64, out: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(out, "out")?;
        let p = lift(GevParams::new(mu, sigma, xi))?;
        *out = lift(p.cdf(x))?;
        Ok(())
    })
}

/// GEV quantile at non-exceedance probability `p`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn eva_gev_quantile(mu: f64, sigma: f64, xi: f64, p: f64, out: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = lift(GevParams::new(mu, sigma, xi))?;
        *out = lift(g.quantile(p))?;
        Ok(())
    })
}

/// 1-in-`period` annual exceedance value of a GEV.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn eva_return_level(mu: f64, sigma: f64, xi: f64, period: f64, out: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(out, "out")?;
        let g = lift(GevParams::new(mu, sigma, xi))?;
        *out = lift(return_level(&g, period))?;
        Ok(())
    })
}

/// Exceedance counts of a log-spaced threshold schedule, written to
/// `counts[0..k]`.
///
/// # Safety
/// `counts` must point to `capacity` writable `size_t` values.
#[no_mangle]
pub unsafe extern "C" fn eva_build_schedule(
    n_observations: usize,
    q_max: f64,
    q_min: f64,
    k: usize,
    counts: *mut usize,
    capacity: usize,
) -> EvaStatus {
    guard(|| {
        nonnull(counts, "counts")?;
        if capacity < k {
            return Err(fail(EvaStatus::BufferTooSmall, format!("need room for {k} counts, got {capacity}")));
        }
        let s = lift(build_schedule(n_observations, q_max, q_min, k))?;
        std::slice::from_raw_parts_mut(counts, k).copy_from_slice(&s.exceedance_counts);
        Ok(())
    })
}

fn store_fit(fit: FitResult, out: *mut *mut EvaFit) {
    // SAFETY: callers check `out` first.
    unsafe { *out = Box::into_raw(Box::new(EvaFit { inner: fit })) };
}

/// Maximum-likelihood GEV fit to `n` annual maxima. On success `*out`
/// owns a new handle.
///
/// # Safety
/// `maxima` must point to `n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_gev(maxima: *const f64, n: usize, out: *mut *mut EvaFit) -> EvaStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let data = slice(maxima, n, "maxima")?;
        store_fit(lift(fit_gev(data, &OptimizerSettings::default()))?, out);
        Ok(())
    })
}

/// Point-process fit to the values of `daily` above `threshold`, with the
/// record spanning `n_years` years.
///
/// # Safety
/// `daily` must point to `n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_pot(
    daily: *const f64,
    n: usize,
    threshold: f64,
    n_years: f64,
    out: *mut *mut EvaFit,
) -> EvaStatus {
    guard(|| {
        nonnull(out, "out")?;
        *out = ptr::null_mut();
        let data = slice(daily, n, "daily")?;
        store_fit(lift(fit_pot(data, threshold, n_years, &OptimizerSettings::default()))?, out);
        Ok(())
    })
}

/// `(mu, sigma, xi)` of a fit.
///
/// # Safety
/// `fit` must be a live handle; `params` must point to 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_params(fit: *const EvaFit, params: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(fit, "fit")?;
        nonnull(params, "params")?;
        let p = &(*fit).inner.params;
        std::slice::from_raw_parts_mut(params, 3).copy_from_slice(&[p.mu, p.sigma, p.xi]);
        Ok(())
    })
}

/// Row-major 3×3 covariance of `(mu, sigma, xi)`.
///
/// # Safety
/// `fit` must be a live handle; `cov` must point to 9 doubles.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_covariance(fit: *const EvaFit, cov: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(fit, "fit")?;
        nonnull(cov, "cov")?;
        let c = (*fit)
            .inner
            .covariance
            .ok_or_else(|| fail(EvaStatus::NoCovariance, "Hessian at the optimum is not invertible"))?;
        let out = std::slice::from_raw_parts_mut(cov, 9);
        for i in 0..3 {
            out[3 * i..3 * i + 3].copy_from_slice(&c.0[i]);
        }
        Ok(())
    })
}

/// Number of observations used and the convergence flag (1 or 0).
///
/// # Safety
/// `fit` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_info(fit: *const EvaFit, n_used: *mut usize, converged: *mut c_int) -> EvaStatus {
    guard(|| {
        nonnull(fit, "fit")?;
        nonnull(n_used, "n_used")?;
        nonnull(converged, "converged")?;
        *n_used = (*fit).inner.n_used;
        *converged = (*fit).inner.converged as c_int;
        Ok(())
    })
}

/// 1-in-`period` value and its delta-method standard error. `se` may be
/// NULL; when the fit has no covariance `*se` is NaN.
///
/// # Safety
/// `fit` must be a live handle; `value` must be valid; `se` valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_aep(fit: *const EvaFit, period: f64, value: *mut f64, se: *mut f64) -> EvaStatus {
    guard(|| {
        nonnull(fit, "fit")?;
        nonnull(value, "value")?;
        let est = lift(aep_with_uncertainty(&(*fit).inner, period))?;
        *value = est.value;
        if !se.is_null() {
            *se = est.se.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `fit` must come from `eva_fit_gev`/`eva_fit_pot` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn eva_fit_free(fit: *mut EvaFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
