//! C ABI for the periodic-solution finder.
//!
//! Systems are opaque handles created from the JSON system format. Every
//! call returns a [`QrStatus`]; on failure [`qr_last_error`] describes the
//! problem. Strings handed out by the library are freed with
//! [`qr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qriccati::conditions::{check_theorem31_conditions, ConditionSettings};
use qriccati::finder::{find_periodic_solution, FinderError, FinderOptions};
use qriccati::integrator::{poincare_map, riccati_rhs, FlowError, IntegrationSettings};
use qriccati::io::{parse_system, to_deterministic_json};
use qriccati::transforms::reduce_to_case_i;
use qriccati::{Quaternion, RiccatiSystem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QrStatus {
    QrOk = 0,
    QrNotApplicable = 2,
    QrNoConvergence = 3,
    QrInvalidInput = 4,
    QrNullPointer = 5,
    QrEscaped = 6,
    QrPanic = 7,
}

/// Raw quaternion `w + x i + y j + z k`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<Quaternion> for QrQuaternion {
    fn from(q: Quaternion) -> Self {
        Self { w: q.w, x: q.x, y: q.y, z: q.z }
    }
}

impl From<QrQuaternion> for Quaternion {
    fn from(q: QrQuaternion) -> Self {
        Quaternion::new(q.w, q.x, q.y, q.z)
    }
}

/// Finder options. Zero in a numeric field selects the default.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrFindOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub grid: u32,
    pub m0_override: u32,
    pub strict_proof: bool,
    pub force: bool,
}

impl QrFindOptions {
    fn to_options(self) -> Result<FinderOptions, String> {
        let mut o = FinderOptions::default();
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if v < 0.0 || !v.is_finite() {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.rel_tol > 0.0 {
            o.integration.rel_tol = self.rel_tol;
        }
        if self.abs_tol > 0.0 {
            o.integration.abs_tol = self.abs_tol;
        }
        if self.grid > 0 {
            o.conditions.grid = self.grid as usize;
        }
        if self.m0_override > 0 {
            o.m0_override = Some(self.m0_override);
        }
        o.strict_proof = self.strict_proof;
        o.force = self.force;
        Ok(o)
    }
}

/// Opaque handle to a parsed system.
pub struct QrSystem {
    inner: RiccatiSystem,
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

fn fail(status: QrStatus, msg: impl Into<String>) -> QrStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `QrPanic`.
fn guard(f: impl FnOnce() -> QrStatus) -> QrStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(QrStatus::QrPanic, format!("internal panic: {msg}"))
        }
    }
}

fn finder_status(e: &FinderError) -> QrStatus {
    match e {
        FinderError::NotApplicable { .. } => QrStatus::QrNotApplicable,
        FinderError::Model(_) => QrStatus::QrInvalidInput,
        _ => QrStatus::QrNoConvergence,
    }
}

unsafe fn system_ref<'a>(sys: *const QrSystem) -> Result<&'a RiccatiSystem, QrStatus> {
    if sys.is_null() {
        return Err(fail(QrStatus::QrNullPointer, "system handle is null"));
    }
    Ok(&(*sys).inner)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

/// Parses a system from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_system_from_json(json: *const c_char, out: *mut *mut QrSystem) -> QrStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QrStatus::QrNullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(QrStatus::QrInvalidInput, format!("input is not UTF-8: {e}")),
        };
        match parse_system(text) {
            Ok(l) => {
                *out = Box::into_raw(Box::new(QrSystem { inner: l.system }));
                QrStatus::QrOk
            }
            Err(e) => fail(QrStatus::QrInvalidInput, e.to_string()),
        }
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_system_free(sys: *mut QrSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_system_period(sys: *const QrSystem, out: *mut f64) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if out.is_null() {
            return fail(QrStatus::QrNullPointer, "out is null");
        }
        *out = s.period();
        QrStatus::QrOk
    })
}

/// Right-hand side `q' = −(q a q + b q + q c + d)` at `(t, q)`.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_rhs(sys: *const QrSystem, t: f64, q: QrQuaternion, out: *mut QrQuaternion) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if out.is_null() {
            return fail(QrStatus::QrNullPointer, "out is null");
        }
        *out = riccati_rhs(s, t, q.into()).into();
        QrStatus::QrOk
    })
}

/// Value at `m0·T` of the solution starting from `q0` at 0.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_poincare_map(
    sys: *const QrSystem,
    q0: QrQuaternion,
    m0: u32,
    out: *mut QrQuaternion,
) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if out.is_null() {
            return fail(QrStatus::QrNullPointer, "out is null");
        }
        if m0 == 0 {
            return fail(QrStatus::QrInvalidInput, "m0 must be at least 1");
        }
        match poincare_map(s, q0.into(), m0, &IntegrationSettings::default()) {
            Ok(q) => {
                *out = q.into();
                QrStatus::QrOk
            }
            Err(e @ (FlowError::Escaped(_) | FlowError::StepLimit(_))) => fail(QrStatus::QrEscaped, e.to_string()),
            Err(e) => fail(QrStatus::QrInvalidInput, e.to_string()),
        }
    })
}

/// Condition report as JSON in `*json_out`. `grid = 0` uses the default.
/// Returns `QrNotApplicable` (with the report still written) when no route
/// applies.
///
/// # Safety
/// `sys` must be a live handle and `json_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_check_conditions(sys: *const QrSystem, grid: u32, json_out: *mut *mut c_char) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if json_out.is_null() {
            return fail(QrStatus::QrNullPointer, "json_out is null");
        }
        *json_out = ptr::null_mut();
        let mut settings = ConditionSettings::default();
        if grid > 0 {
            settings.grid = grid as usize;
        }
        let report = match check_theorem31_conditions(s, &settings) {
            Ok(r) => r,
            Err(e) => return fail(QrStatus::QrInvalidInput, e.to_string()),
        };
        match to_deterministic_json(&report) {
            Ok(j) => *json_out = into_c_string(j),
            Err(e) => return fail(QrStatus::QrPanic, e.to_string()),
        }
        if report.theorem31_applicable() {
            QrStatus::QrOk
        } else {
            fail(QrStatus::QrNotApplicable, "no route applies")
        }
    })
}

/// Default finder options (all fields zero or false).
#[no_mangle]
pub extern "C" fn qr_find_options_default() -> QrFindOptions {
    QrFindOptions { rel_tol: 0.0, abs_tol: 0.0, grid: 0, m0_override: 0, strict_proof: false, force: false }
}

/// Finds a periodic solution. `opts` and `json_out` may be null. On success
/// the start value, period multiplier and residual of the main branch are
/// written to the non-null output pointers.
///
/// # Safety
/// `sys` must be a live handle; non-null pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qr_find_periodic(
    sys: *const QrSystem,
    opts: *const QrFindOptions,
    q0_out: *mut QrQuaternion,
    m0_out: *mut u32,
    residual_out: *mut f64,
    json_out: *mut *mut c_char,
) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        let raw = if opts.is_null() { qr_find_options_default() } else { *opts };
        let options = match raw.to_options() {
            Ok(o) => o,
            Err(m) => return fail(QrStatus::QrInvalidInput, m),
        };
        if !json_out.is_null() {
            *json_out = ptr::null_mut();
        }
        let report = match find_periodic_solution(s, &options) {
            Ok(r) => r,
            Err(e) => {
                let status = finder_status(&e);
                if !json_out.is_null() {
                    if let Ok(j) = to_deterministic_json(&e) {
                        *json_out = into_c_string(j);
                    }
                }
                return fail(status, e.to_string());
            }
        };
        let sol = &report.solution;
        if !q0_out.is_null() {
            *q0_out = sol.quaternion.into();
        }
        if !m0_out.is_null() {
            *m0_out = sol.m0;
        }
        if !residual_out.is_null() {
            *residual_out = sol.residual;
        }
        if !json_out.is_null() {
            match to_deterministic_json(&report) {
                Ok(j) => *json_out = into_c_string(j),
                Err(e) => return fail(QrStatus::QrPanic, e.to_string()),
            }
        }
        if report.branches().all(|b| b.residual < options.accept_tol) {
            QrStatus::QrOk
        } else {
            fail(QrStatus::QrNoConvergence, "residual above acceptance tolerance")
        }
    })
}

/// Reduces the sign case of `a` to case I. The reduced system goes to
/// `*out`; the transformation record, as JSON, to `*record_out` if non-null.
///
/// # Safety
/// `sys` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qr_reduce(
    sys: *const QrSystem,
    allow_negate: bool,
    out: *mut *mut QrSystem,
    record_out: *mut *mut c_char,
) -> QrStatus {
    guard(|| {
        let s = match system_ref(sys) {
            Ok(s) => s,
            Err(e) => return e,
        };
        if out.is_null() {
            return fail(QrStatus::QrNullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if !record_out.is_null() {
            *record_out = ptr::null_mut();
        }
        let (reduced, record) = match reduce_to_case_i(s, allow_negate) {
            Ok(r) => r,
            Err(e) => return fail(QrStatus::QrNotApplicable, e.to_string()),
        };
        if !record_out.is_null() {
            match to_deterministic_json(&record) {
                Ok(j) => *record_out = into_c_string(j),
                Err(e) => return fail(QrStatus::QrPanic, e.to_string()),
            }
        }
        *out = Box::into_raw(Box::new(QrSystem { inner: reduced }));
        QrStatus::QrOk
    })
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next library call on the same thread.
#[no_mangle]
pub extern "C" fn qr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn qr_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}
