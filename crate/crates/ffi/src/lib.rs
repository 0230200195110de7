//! C ABI over `btp-core`.
//!
//! Structures and reports are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`BtpStatus`]; on failure the
//! message is available from [`btp_last_error`] on the same thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use btp::classify::{self, ClassificationReport};
use btp::engine::Engine;
use btp::forms::StructureEquations;
use btp::{catalog, io, Error};

/// Validated structure equations of a left-invariant Hermitian structure.
pub struct BtpStructure(StructureEquations);

/// Classification verdicts and residuals for one structure.
pub struct BtpReport(ClassificationReport);

#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BtpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Schema = 4,
    NotValidated = 5,
    NotIntegrable = 6,
    Indeterminate = 7,
    Precondition = 8,
    UnknownName = 9,
    InvalidParameter = 10,
    Internal = 11,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> BtpStatus {
    match e {
        Error::Parse { .. } => BtpStatus::Parse,
        Error::Schema(_) => BtpStatus::Schema,
        Error::NotValidated { .. } => BtpStatus::NotValidated,
        Error::NotIntegrable => BtpStatus::NotIntegrable,
        Error::Indeterminate(_) => BtpStatus::Indeterminate,
        Error::InvalidParameter(_) => BtpStatus::InvalidParameter,
        _ => BtpStatus::Precondition,
    }
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (BtpStatus, String)>) -> BtpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BtpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BtpStatus::Internal
        }
    }
}

fn core(e: Error) -> (BtpStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BtpStatus, String) {
    (BtpStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (BtpStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (BtpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn btp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a JSON structure document.
///
/// # Safety
/// `json` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btp_structure_parse(json: *const u8, len: usize, out: *mut *mut BtpStructure) -> BtpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let bytes = std::slice::from_raw_parts(json, len);
        let s = io::parse(bytes).map_err(core)?;
        *out = Box::into_raw(Box::new(BtpStructure(s)));
        Ok(())
    })
}

/// Builds a catalog entry by family or preset name. `params` is a
/// `key=value` list separated by commas, or null.
///
/// # Safety
/// `name` and a non-null `params` must be nul-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn btp_catalog_entry(
    name: *const c_char,
    params: *const c_char,
    out: *mut *mut BtpStructure,
) -> BtpStatus {
    guard(|| {
        let name = text(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut map = BTreeMap::new();
        if !params.is_null() {
            for kv in text(params, "params")?.split(',').filter(|s| !s.trim().is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| (BtpStatus::InvalidParameter, format!("expected key=value, got {kv}")))?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let preset = map.is_empty().then(|| catalog::catalog().into_iter().find(|e| e.name == name)).flatten();
        let s = match preset {
            Some(e) => e.s,
            None => catalog::lookup(name, &map).map_err(|e| match e {
                Error::InvalidParameter(m) if m.starts_with("unknown catalog entry") => (BtpStatus::UnknownName, m),
                other => core(other),
            })?,
        };
        *out = Box::into_raw(Box::new(BtpStructure(s)));
        Ok(())
    })
}

/// Complex dimension n, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn btp_structure_dimension(s: *const BtpStructure) -> usize {
    s.as_ref().map_or(0, |s| s.0.n())
}

/// Canonical JSON of the structure; release with [`btp_string_free`]. Null on a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn btp_structure_emit(s: *const BtpStructure) -> *mut c_char {
    match s.as_ref() {
        Some(s) => into_c_string(String::from_utf8(io::emit(&s.0)).expect("JSON is UTF-8")),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btp_structure_free(s: *mut BtpStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Largest residual of the identities that hold on every Hermitian structure.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn btp_identity_max_residual(s: *const BtpStructure, out: *mut f64) -> BtpStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("structure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = Engine::new(&s.0).map_err(core)?;
        let cross = e.pluriclosed_formula_crosscheck().map_err(core)?;
        *out = e.identity_suite().values().fold(cross, |m, v| m.max(*v));
        Ok(())
    })
}

/// Classifies at tolerance `tol`.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn btp_classify(s: *const BtpStructure, tol: f64, out: *mut *mut BtpReport) -> BtpStatus {
    guard(|| {
        let s = s.as_ref().ok_or_else(|| null("structure"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err((BtpStatus::InvalidParameter, format!("tolerance {tol} must be positive")));
        }
        let r = classify::classify(&s.0, tol).map_err(core)?;
        *out = Box::into_raw(Box::new(BtpReport(r)));
        Ok(())
    })
}

/// Reads a flag such as `"btp_direct"` or `"bkl"`. Flags that are undefined
/// for this structure report `UnknownName`.
///
/// # Safety
/// `r` must be a live handle, `name` a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn btp_report_flag(r: *const BtpReport, name: *const c_char, out: *mut bool) -> BtpStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        let name = text(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = r.0.flag(name).ok_or_else(|| (BtpStatus::UnknownName, format!("no flag {name}")))?;
        Ok(())
    })
}

/// Reads the residual behind a verdict.
///
/// # Safety
/// `r` must be a live handle, `name` a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn btp_report_residual(r: *const BtpReport, name: *const c_char, out: *mut f64) -> BtpStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        let name = text(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = *r.0.residuals.get(name).ok_or_else(|| (BtpStatus::UnknownName, format!("no residual {name}")))?;
        Ok(())
    })
}

/// The whole report as JSON; release with [`btp_string_free`]. Null on a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn btp_report_json(r: *const BtpReport) -> *mut c_char {
    match r.as_ref() {
        Some(r) => into_c_string(serde_json::to_string(&r.0).expect("reports serialize")),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btp_report_free(r: *mut BtpReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn btp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
