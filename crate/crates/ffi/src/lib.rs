//! C ABI for the pseudohermitian calculus library.
//!
//! Scalar fields are parsed from the expression DSL into opaque handles;
//! every function returns a [`WbStatus`] code and reports details through
//! a thread-local message retrievable with [`wb_last_error_message`].
//! Study runners accept the same JSON configuration as the CLI and return
//! the JSON report as an owned string ([`wb_string_free`] releases it).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use webster::cli::{parse_field, run_glue_study, run_yamabe_study, verify, RunConfig};
use webster::hgroup::HPoint;
use webster::phcalc::{
    conformal_curvature, default_probes, grad_norm_sq, scalar_curvature, sublaplacian, torsion,
    DeformationTensor,
};
use webster::Error;

/// Status codes of every C-ABI call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Expression or configuration text failed to parse.
    Parse = 3,
    /// A calculus guard fired (|φ| ≥ 1, nonpositive factor, ...).
    Domain = 4,
    /// The base tensor violates the gluing normalization.
    Normalization = 5,
    /// The quotient minimizer did not converge.
    Nonconvergence = 6,
    Io = 7,
    Internal = 8,
}

/// Opaque handle of a parsed scalar field.
#[repr(C)]
pub struct WbField {
    _private: [u8; 0],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> WbStatus {
    match err {
        Error::Syntax { .. } | Error::Config { .. } | Error::Json(_) => WbStatus::Parse,
        Error::Domain { .. }
        | Error::Range { .. }
        | Error::Positivity { .. }
        | Error::ZeroDenominator => WbStatus::Domain,
        Error::Normalization(_) => WbStatus::Normalization,
        Error::Io(_) => WbStatus::Io,
        Error::NumericalInvariant { .. } => WbStatus::Internal,
    }
}

fn fail(err: Error) -> WbStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Message of the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|c| c.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, WbStatus> {
    if ptr.is_null() {
        set_error("null string argument".into());
        return Err(WbStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8".into());
        WbStatus::InvalidUtf8
    })
}

unsafe fn field_ref<'a>(ptr: *const WbField) -> Result<&'a webster::hgroup::ScalarField, WbStatus> {
    if ptr.is_null() {
        set_error("null field handle".into());
        return Err(WbStatus::NullArgument);
    }
    Ok(&*(ptr as *const webster::hgroup::ScalarField))
}

fn out_slot<T>(ptr: *mut T) -> Result<(), WbStatus> {
    if ptr.is_null() {
        set_error("null output pointer".into());
        return Err(WbStatus::NullArgument);
    }
    Ok(())
}

/// Builds the deformation tensor for pointwise queries, probing the box
/// that contains the query point.
fn tensor_for(
    phi: &webster::hgroup::ScalarField,
    p: HPoint,
) -> Result<DeformationTensor, Error> {
    let half_width = p.x.abs().max(p.y.abs()).max(p.z.abs()).max(1.0);
    DeformationTensor::new(phi.clone(), default_probes(half_width))
}

/// Parses a field expression into an owned handle. On success `*out`
/// receives the handle, to be released with [`wb_field_free`].
///
/// # Safety
/// `src` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wb_field_parse(src: *const c_char, out: *mut *mut WbField) -> WbStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return WbStatus::NullArgument;
    }
    let text = match read_str(src) {
        Ok(t) => t,
        Err(s) => return s,
    };
    match parse_field(text) {
        Ok(field) => {
            *out = Box::into_raw(Box::new(field)) as *mut WbField;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Releases a field handle. Null is ignored.
///
/// # Safety
/// `field` must come from [`wb_field_parse`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wb_field_free(field: *mut WbField) {
    if !field.is_null() {
        drop(Box::from_raw(field as *mut webster::hgroup::ScalarField));
    }
}

/// Evaluates a field at a chart point.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_field_eval(
    field: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> WbStatus {
    let f = match field_ref(field) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out_re).is_err() || out_slot(out_im).is_err() {
        return WbStatus::NullArgument;
    }
    match f.eval(HPoint::new(x, y, z)) {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Tanaka-Webster scalar curvature `R^{φ,Θ}` at a point.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_scalar_curvature(
    phi: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> WbStatus {
    let phi = match field_ref(phi) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out).is_err() {
        return WbStatus::NullArgument;
    }
    let p = HPoint::new(x, y, z);
    match tensor_for(phi, p).and_then(|t| scalar_curvature(&t, p)) {
        Ok(v) => {
            *out = v;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Curvature under the conformal contact form `w²Θ`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_conformal_curvature(
    phi: *const WbField,
    w: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> WbStatus {
    let phi = match field_ref(phi) {
        Ok(f) => f,
        Err(s) => return s,
    };
    let w = match field_ref(w) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out).is_err() {
        return WbStatus::NullArgument;
    }
    let p = HPoint::new(x, y, z);
    match tensor_for(phi, p).and_then(|t| conformal_curvature(&t, w, p)) {
        Ok(v) => {
            *out = v;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Pseudohermitian torsion coefficient at a point (complex).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_torsion(
    phi: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> WbStatus {
    let phi = match field_ref(phi) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out_re).is_err() || out_slot(out_im).is_err() {
        return WbStatus::NullArgument;
    }
    let p = HPoint::new(x, y, z);
    match tensor_for(phi, p).and_then(|t| torsion(&t, p)) {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Sublaplacian `Δ_b u` of a real field at a point.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_sublaplacian(
    phi: *const WbField,
    u: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> WbStatus {
    let phi = match field_ref(phi) {
        Ok(f) => f,
        Err(s) => return s,
    };
    let u = match field_ref(u) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out).is_err() {
        return WbStatus::NullArgument;
    }
    let p = HPoint::new(x, y, z);
    match tensor_for(phi, p).and_then(|t| sublaplacian(&t, u, p)) {
        Ok(v) => {
            *out = v;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Squared horizontal gradient norm of `u` under `(φ, w²Θ)`.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_grad_norm_sq(
    phi: *const WbField,
    w: *const WbField,
    u: *const WbField,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> WbStatus {
    let phi = match field_ref(phi) {
        Ok(f) => f,
        Err(s) => return s,
    };
    let w = match field_ref(w) {
        Ok(f) => f,
        Err(s) => return s,
    };
    let u = match field_ref(u) {
        Ok(f) => f,
        Err(s) => return s,
    };
    if out_slot(out).is_err() {
        return WbStatus::NullArgument;
    }
    let p = HPoint::new(x, y, z);
    match tensor_for(phi, p).and_then(|t| grad_norm_sq(&t, w, u, p)) {
        Ok(v) => {
            *out = v;
            WbStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Runs all verification suites. `*out_passed` receives 1 when every
/// suite passed, 0 otherwise.
///
/// # Safety
/// `out_passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wb_verify(out_passed: *mut i32) -> WbStatus {
    if out_slot(out_passed).is_err() {
        return WbStatus::NullArgument;
    }
    let suites = verify::run_all_suites();
    let all = suites.iter().all(|s| s.passed);
    if !all {
        let failing: Vec<&str> = suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name)
            .collect();
        set_error(format!("failing suites: {}", failing.join(", ")));
    }
    *out_passed = all as i32;
    WbStatus::Ok
}

unsafe fn run_study(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
    runner: impl Fn(&RunConfig) -> Result<(serde_json::Value, bool), Error>,
) -> WbStatus {
    if out_json.is_null() {
        set_error("null output pointer".into());
        return WbStatus::NullArgument;
    }
    let text = match read_str(config_json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let cfg: RunConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => return fail(Error::Config {
            field: "config".into(),
            reason: e.to_string(),
        }),
    };
    if let Err(e) = cfg.validate() {
        return fail(e);
    }
    match runner(&cfg) {
        Ok((value, converged)) => {
            let rendered = value.to_string();
            match CString::new(rendered) {
                Ok(c) => {
                    *out_json = c.into_raw();
                    if converged {
                        WbStatus::Ok
                    } else {
                        set_error("optimizer did not converge on some rows".into());
                        WbStatus::Nonconvergence
                    }
                }
                Err(_) => {
                    set_error("report contained an interior NUL".into());
                    WbStatus::Internal
                }
            }
        }
        Err(e) => fail(e),
    }
}

/// Runs the gluing convergence study for a JSON configuration (the same
/// schema as the CLI `--config` file) and returns the JSON report in
/// `*out_json`, to be released with [`wb_string_free`].
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_glue_study(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> WbStatus {
    run_study(config_json, out_json, |cfg| {
        run_glue_study(cfg).map(|r| (r.to_json(), true))
    })
}

/// Runs the Yamabe comparison study; returns [`WbStatus::Nonconvergence`]
/// (with the report still written) when any optimizer row failed to
/// converge.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wb_yamabe_study(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> WbStatus {
    run_study(config_json, out_json, |cfg| {
        run_yamabe_study(cfg).map(|r| {
            let converged = r.rows.iter().all(|row| row.converged);
            (r.to_json(), converged)
        })
    })
}

/// Releases a string returned by a study runner. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
