//! C interface to the harris-kinetics workbench.
//!
//! Objects are opaque handles created by `hk_*_new`/constructor functions and
//! released with the matching `hk_*_free`. Every fallible function returns an
//! [`HkStatus`]; on failure the message is available from
//! [`hk_last_error`] until the next call on the same thread. Strings handed
//! out by the library are freed with [`hk_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use harris_kinetics::bgk_interval::{solve_steady, Grid1D, SteadyStateReport};
use harris_kinetics::cli::{self, config::RunConfig, CliError};
use harris_kinetics::models::presets::preset;
use harris_kinetics::models::ModelSpec;
use harris_kinetics::rate_calculus::{
    degenerate_boltzmann_rate, doeblin_rate, subgeometric_envelope, ConcaveRateFn, DoeblinInput, RateBound,
};
use harris_kinetics::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidUtf8 = 3,
    Json = 4,
    NotConverged = 5,
    /// The operation does not apply to this object.
    Unsupported = 6,
    Runtime = 7,
    Panic = 8,
}

/// Opaque model handle.
pub struct HkModel {
    spec: ModelSpec,
}

/// Opaque convergence-bound handle.
pub struct HkRateBound {
    bound: RateBound,
}

/// Opaque stationary-solution handle.
pub struct HkSteadyState {
    report: SteadyStateReport,
}

/// Moment profiles available from [`hk_steady_profile`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HkMoment {
    Density = 0,
    Velocity = 1,
    Pressure = 2,
    Temperature = 3,
    Position = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> HkStatus {
    match e {
        Error::NotConverged { .. } => HkStatus::NotConverged,
        Error::Unsupported(_) => HkStatus::Unsupported,
        Error::Json(_) => HkStatus::Json,
        Error::InvalidInput(_)
        | Error::ConstantsOutOfRange(_)
        | Error::UnknownRegime { .. }
        | Error::InvalidWeight { .. }
        | Error::StabilityLimit { .. } => HkStatus::InvalidInput,
        _ => HkStatus::Runtime,
    }
}

struct Fail(HkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, recording any error or panic.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> HkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HkStatus::Ok,
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(_) => {
            set_error("internal panic");
            HkStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(HkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HkStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn out_arg<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(HkStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn give<T>(out: *mut *mut T, v: T) {
    unsafe { *out = Box::into_raw(Box::new(v)) };
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn hk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by the library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Looks up a named model preset.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_model_preset(name: *const c_char, out: *mut *mut HkModel) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let name = str_arg(name, "name")?;
        let p = preset(name)?;
        give(out, HkModel { spec: p.model });
        Ok(())
    })
}

/// Parses a model from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_model_from_json(json: *const c_char, out: *mut *mut HkModel) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| Fail(HkStatus::Json, e.to_string()))?;
        spec.validate()?;
        give(out, HkModel { spec });
        Ok(())
    })
}

/// Phase-space dimension `d` of the model (positions and velocities in `R^d`).
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_model_dim(model: *const HkModel, out: *mut usize) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = model.as_ref().ok_or(Fail(HkStatus::NullPointer, "model is null".into()))?;
        *out = m.spec.dim();
        Ok(())
    })
}

/// JSON description of the model; free with [`hk_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_model_to_json(model: *const HkModel, out: *mut *mut c_char) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let m = model.as_ref().ok_or(Fail(HkStatus::NullPointer, "model is null".into()))?;
        let s = serde_json::to_string(&m.spec).map_err(Error::from)?;
        *out = CString::new(s).map_err(|e| Fail(HkStatus::Runtime, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hk_model_free(model: *mut HkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Geometric bound from a minorisation constant `alpha` at time `tau`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_doeblin_rate(alpha: f64, tau: f64, out: *mut *mut HkRateBound) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        give(out, HkRateBound { bound: doeblin_rate(DoeblinInput { alpha, tau })? });
        Ok(())
    })
}

/// Geometric bound for degenerate scattering.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_degenerate_boltzmann_rate(
    beta: f64,
    kappa: f64,
    tau: f64,
    sigma_inf: f64,
    out: *mut *mut HkRateBound,
) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        give(out, HkRateBound { bound: degenerate_boltzmann_rate(beta, kappa, tau, sigma_inf)? });
        Ok(())
    })
}

/// Subgeometric envelope with rate function `V(s) = 1 + s^xi`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_subgeometric_power(xi: f64, c: f64, mu_phi: f64, out: *mut *mut HkRateBound) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        give(out, HkRateBound { bound: subgeometric_envelope(ConcaveRateFn::power(xi)?, c, mu_phi)? });
        Ok(())
    })
}

/// Envelope value at time `t >= 0`.
///
/// # Safety
/// `bound` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_rate_bound_eval(bound: *const HkRateBound, t: f64, out: *mut f64) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let b = bound.as_ref().ok_or(Fail(HkStatus::NullPointer, "bound is null".into()))?;
        if t.is_nan() || t < 0.0 {
            return Err(Fail(HkStatus::InvalidInput, format!("t must be >= 0 (got {t})")));
        }
        *out = b.bound.eval(t);
        Ok(())
    })
}

/// Prefactor `C`.
///
/// # Safety
/// `bound` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_rate_bound_c(bound: *const HkRateBound, out: *mut f64) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let b = bound.as_ref().ok_or(Fail(HkStatus::NullPointer, "bound is null".into()))?;
        *out = b.bound.c();
        Ok(())
    })
}

/// Exponential rate `lambda`; `Unsupported` for subgeometric bounds.
///
/// # Safety
/// `bound` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_rate_bound_lambda(bound: *const HkRateBound, out: *mut f64) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let b = bound.as_ref().ok_or(Fail(HkStatus::NullPointer, "bound is null".into()))?;
        match b.bound.lambda() {
            Some(l) => {
                *out = l;
                Ok(())
            }
            None => Err(Fail(HkStatus::Unsupported, "subgeometric bound has no exponential rate".into())),
        }
    })
}

/// # Safety
/// `bound` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hk_rate_bound_free(bound: *mut HkRateBound) {
    if !bound.is_null() {
        drop(Box::from_raw(bound));
    }
}

/// Stationary nonlinear BGK solution on `[0, 1]` with wall temperatures
/// `t0`, `t1` and Knudsen number `kappa`, first-order upwind transport.
/// Returns `NotConverged` (and no handle) if `max_iter` sweeps do not reach `tol`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_steady_solve(
    t0: f64,
    t1: f64,
    kappa: f64,
    nx: usize,
    nv: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut HkSteadyState,
) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let grid = Grid1D::new(nx, nv, t0.max(t1));
        let report = solve_steady(t0, t1, kappa, &grid, tol, max_iter)?;
        if !report.converged {
            return Err(Error::NotConverged {
                iterations: report.iterations,
                residual: report.residual,
            }
            .into());
        }
        give(out, HkSteadyState { report });
        Ok(())
    })
}

/// Number of spatial cells.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_steady_len(state: *const HkSteadyState, out: *mut usize) -> HkStatus {
    guard(|| {
        out_arg(out, "out")?;
        let s = state.as_ref().ok_or(Fail(HkStatus::NullPointer, "state is null".into()))?;
        *out = s.report.x.len();
        Ok(())
    })
}

/// Copies one moment profile into `buf`, which must hold `len` values with
/// `len` equal to [`hk_steady_len`].
///
/// # Safety
/// `state` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hk_steady_profile(
    state: *const HkSteadyState,
    which: HkMoment,
    buf: *mut f64,
    len: usize,
) -> HkStatus {
    guard(|| {
        out_arg(buf, "buf")?;
        let s = state.as_ref().ok_or(Fail(HkStatus::NullPointer, "state is null".into()))?;
        let r = &s.report;
        let src = match which {
            HkMoment::Density => &r.rho,
            HkMoment::Velocity => &r.u,
            HkMoment::Pressure => &r.p,
            HkMoment::Temperature => &r.t,
            HkMoment::Position => &r.x,
        };
        if len != src.len() {
            return Err(Fail(
                HkStatus::InvalidInput,
                format!("buffer length {len} does not match profile length {}", src.len()),
            ));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn hk_steady_free(state: *mut HkSteadyState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Runs one command-line subcommand (`rates`, `verify-drift`, `tv-decay`, …)
/// on a JSON run configuration without touching the file system. On success
/// `out_json` receives `{"status", "summary", "config"}`; free it with
/// [`hk_string_free`]. A certified failure or inconclusive result still
/// returns `Ok`; inspect `status`.
///
/// # Safety
/// `subcommand` and `config_json` must be NUL-terminated strings; `out_json`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn hk_run_json(
    subcommand: *const c_char,
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> HkStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        let cmd = str_arg(subcommand, "subcommand")?;
        let text = str_arg(config_json, "config_json")?;
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Fail(HkStatus::Json, e.to_string()))?;
        let to_fail = |e: CliError| match e {
            CliError::Usage(m) => Fail(HkStatus::InvalidInput, m),
            CliError::Run(e) => e.into(),
        };
        let resolved = cli::resolve(cmd, cfg).map_err(to_fail)?;
        let outcome = cli::execute(cmd, &resolved).map_err(to_fail)?;
        let doc = serde_json::json!({
            "status": outcome.status,
            "summary": outcome.summary,
            "config": resolved,
        });
        *out_json = CString::new(doc.to_string())
            .map_err(|e| Fail(HkStatus::Runtime, e.to_string()))?
            .into_raw();
        Ok(())
    })
}
