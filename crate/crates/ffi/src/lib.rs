//! C ABI over `twisted-wold`.
//!
//! Tuples live behind the opaque [`TwoldTuple`] handle. Every fallible call
//! returns a [`TwoldStatus`]; on failure a message is kept per thread and can
//! be read with [`twold_last_error_message`]. Strings handed out by the library
//! are NUL-terminated UTF-8 and must be released with [`twold_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use serde_json::json;
use twisted_wold::extension::{extend_doubly_twisted_isometries, verify_extension};
use twisted_wold::factory;
use twisted_wold::representation::verify_all;
use twisted_wold::specfile::{self, LoadedSpec};
use twisted_wold::wold::{verify_decomposition, WoldOptions};
use twisted_wold::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoldStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed spec, unknown example, or inconsistent dimensions.
    Parse = 3,
    /// A mathematical precondition failed (e.g. the input is not doubly twisted).
    Math = 4,
    /// The computation ran but at least one check failed; the report is still returned.
    CheckFailed = 5,
    Panic = 6,
}

/// Opaque tuple handle.
pub struct TwoldTuple {
    spec: LoadedSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> TwoldStatus {
    if e.is_input_error() || matches!(e, Error::Unsupported(_)) {
        TwoldStatus::Parse
    } else {
        TwoldStatus::Math
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<TwoldStatus, (TwoldStatus, String)>) -> TwoldStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside twisted-wold");
            TwoldStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (TwoldStatus, String) {
    (status_of(&e), e.to_string())
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, (TwoldStatus, String)> {
    if p.is_null() {
        return Err((TwoldStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (TwoldStatus::InvalidUtf8, e.to_string()))
}

unsafe fn tuple_ref<'a>(t: *const TwoldTuple) -> Result<&'a TwoldTuple, (TwoldStatus, String)> {
    t.as_ref().ok_or((TwoldStatus::NullPointer, "null tuple handle".into()))
}

unsafe fn write_out<T>(out: *mut *mut T, value: *mut T) -> Result<(), (TwoldStatus, String)> {
    if out.is_null() {
        return Err((TwoldStatus::NullPointer, "null output pointer".into()));
    }
    *out = value;
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), (TwoldStatus, String)> {
    if out.is_null() {
        return Err((TwoldStatus::NullPointer, "null output pointer".into()));
    }
    let c = CString::new(s).map_err(|e| (TwoldStatus::Parse, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn boxed(spec: LoadedSpec) -> *mut TwoldTuple {
    Box::into_raw(Box::new(TwoldTuple { spec }))
}

/// Parse a `twisted-tuple/1` JSON document into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_tuple_from_json(json: *const c_char, out: *mut *mut TwoldTuple) -> TwoldStatus {
    guard(|| {
        let text = read_str(json)?;
        let spec = specfile::parse(text).map_err(lib_err)?;
        write_out(out, boxed(spec))?;
        Ok(TwoldStatus::Ok)
    })
}

/// Build a named fixture (see `twold example list`) with the given seed.
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_tuple_from_example(
    name: *const c_char,
    seed: u64,
    out: *mut *mut TwoldTuple,
) -> TwoldStatus {
    guard(|| {
        let name = read_str(name)?;
        let tuple = factory::make(name, seed).map_err(lib_err)?;
        write_out(out, boxed(LoadedSpec { tuple, subset: None, window: None }))?;
        Ok(TwoldStatus::Ok)
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `t` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn twold_tuple_free(t: *mut TwoldTuple) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of coordinates `k`; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn twold_tuple_rank(t: *const TwoldTuple) -> usize {
    t.as_ref().map_or(0, |t| t.spec.tuple.k())
}

/// Canonical spec text of the tuple.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_tuple_to_json(t: *const TwoldTuple, out: *mut *mut c_char) -> TwoldStatus {
    guard(|| {
        let t = tuple_ref(t)?;
        let s = specfile::to_canonical_string(&t.spec.tuple, t.spec.subset.clone(), t.spec.window);
        write_string(out, s)?;
        Ok(TwoldStatus::Ok)
    })
}

/// Run the relation suite on window `window` and write a JSON array of check
/// reports to `report`. Returns `CHECK_FAILED` when any check fails.
///
/// # Safety
/// `t` must be a live handle; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_verify(
    t: *const TwoldTuple,
    window: usize,
    tol: f64,
    report: *mut *mut c_char,
) -> TwoldStatus {
    guard(|| {
        let t = tuple_ref(t)?;
        let checks = verify_all(&t.spec.tuple, window, tol).map_err(lib_err)?;
        let passed = checks.iter().all(|c| c.passed);
        write_string(report, serde_json::to_string(&checks).map_err(|e| (TwoldStatus::Parse, e.to_string()))?)?;
        Ok(if passed { TwoldStatus::Ok } else { TwoldStatus::CheckFailed })
    })
}

/// Existence verdict and per-degree summand dimensions as JSON:
/// `{"existence": bool, "witness": …, "summands": {"{0,1}": {"(0,0)": 1, …}, …}}`.
/// Returns `CHECK_FAILED` when no decomposition exists or a check fails.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_wold_dims_json(
    t: *const TwoldTuple,
    window: usize,
    out: *mut *mut c_char,
) -> TwoldStatus {
    guard(|| {
        let t = tuple_ref(t)?;
        let dec = verify_decomposition(&t.spec.tuple, &WoldOptions::default().with_window(window)).map_err(lib_err)?;
        let summands: serde_json::Map<String, serde_json::Value> = if dec.existence.holds {
            dec.summands.iter().map(|s| (s.label.clone(), json!(s.dims))).collect()
        } else {
            serde_json::Map::new()
        };
        let doc = json!({
            "existence": dec.existence.holds,
            "witness": dec.existence.witness,
            "passed": dec.passed,
            "summands": summands,
        });
        write_string(out, doc.to_string())?;
        Ok(if dec.passed { TwoldStatus::Ok } else { TwoldStatus::CheckFailed })
    })
}

/// Build the doubly twisted unitary extension and verify it on `window` with
/// levels up to 3. The extended tuple is written to `out` even when a check fails.
///
/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn twold_extend(
    t: *const TwoldTuple,
    window: usize,
    tol: f64,
    out: *mut *mut TwoldTuple,
) -> TwoldStatus {
    guard(|| {
        let t = tuple_ref(t)?;
        let res = extend_doubly_twisted_isometries(&t.spec.tuple, window, tol).map_err(lib_err)?;
        let rep = verify_extension(&res, window, 3, tol).map_err(lib_err)?;
        let failing: Vec<String> = rep.checks.iter().filter(|c| !c.passed).map(|c| c.summary()).collect();
        write_out(out, boxed(LoadedSpec { tuple: res.extended, subset: None, window: Some(window) }))?;
        if failing.is_empty() {
            Ok(TwoldStatus::Ok)
        } else {
            set_error(failing.join("; "));
            Ok(TwoldStatus::CheckFailed)
        }
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn twold_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null. Valid until the next
/// call into the library on the same thread.
#[no_mangle]
pub extern "C" fn twold_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
