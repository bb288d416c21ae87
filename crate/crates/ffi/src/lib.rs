//! C ABI over `qma-core`.
//!
//! Every fallible call returns a [`QmaStatus`] and writes its result through an
//! out-pointer. On failure the message is kept per thread and can be read with
//! [`qma_last_error`]. Handles are opaque and must be released with the matching
//! `*_free` function; strings returned by the library are freed with
//! [`qma_string_free`].

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use qma_core::branching::{decompose, BranchSet};
use qma_core::experiments::{self, Constants, ExperimentReport, ExperimentSpec};
use qma_core::state::{Ket, SpaceShape};
use qma_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Composition = 3,
    Contract = 4,
    PostSelection = 5,
    DispersionOverflow = 6,
    Integration = 7,
    Separation = 8,
    Config = 9,
    OutOfRange = 10,
    Panic = 11,
}

impl From<&Error> for QmaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Composition(_) => QmaStatus::Composition,
            Error::Contract(_) => QmaStatus::Contract,
            Error::PostSelection(_) => QmaStatus::PostSelection,
            Error::DispersionOverflow { .. } => QmaStatus::DispersionOverflow,
            Error::Integration(_) => QmaStatus::Integration,
            Error::Separation { .. } => QmaStatus::Separation,
            Error::Config { .. } => QmaStatus::Config,
        }
    }
}

/// A state vector over named subsystems.
pub struct QmaKet(Ket);

/// A branch decomposition.
pub struct QmaBranchSet(BranchSet);

/// The report of one experiment run.
pub struct QmaReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(QmaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(QmaStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(QmaStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> QmaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QmaStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QmaStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller passes a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Fail(QmaStatus::InvalidString, format!("{what} is not UTF-8")))
}

unsafe fn read_names<'a>(names: *const *const c_char, n: usize) -> Result<Vec<&'a str>, Fail> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if names.is_null() {
        return Err(null("names"));
    }
    // SAFETY: caller passes `n` string pointers.
    let ptrs = unsafe { std::slice::from_raw_parts(names, n) };
    ptrs.iter().map(|&p| unsafe { read_str(p, "name") }).collect()
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: checked non-null; caller owns the slot.
    unsafe { out.write(value) };
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn qma_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Build a ket from subsystem names and dimensions and `len` amplitudes given
/// as separate real and imaginary arrays. `im` may be NULL for a real state.
///
/// # Safety
/// `names` and `dims` hold `n_subsystems` entries; `re` (and `im` if given)
/// hold `len` entries; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_new(
    names: *const *const c_char,
    dims: *const usize,
    n_subsystems: usize,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut QmaKet,
) -> QmaStatus {
    guard(|| {
        let names = unsafe { read_names(names, n_subsystems)? };
        if n_subsystems > 0 && dims.is_null() {
            return Err(null("dims"));
        }
        let dims: &[usize] = if n_subsystems == 0 { &[] } else { unsafe { std::slice::from_raw_parts(dims, n_subsystems) } };
        if re.is_null() {
            return Err(null("re"));
        }
        let re = unsafe { std::slice::from_raw_parts(re, len) };
        let data: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&r| Complex64::new(r, 0.0)).collect()
        } else {
            let im = unsafe { std::slice::from_raw_parts(im, len) };
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
        };
        let shape = SpaceShape::new(names.into_iter().zip(dims.iter().copied()))?;
        let ket = Ket::new(shape, data)?;
        unsafe { put(out, Box::into_raw(Box::new(QmaKet(ket)))) }
    })
}

/// # Safety
/// `ket` is a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_dim(ket: *const QmaKet) -> usize {
    unsafe { ket.as_ref() }.map_or(0, |k| k.0.dim())
}

/// # Safety
/// `ket` is a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_norm(ket: *const QmaKet) -> f64 {
    unsafe { ket.as_ref() }.map_or(f64::NAN, |k| k.0.norm())
}

/// Copy amplitude `index` (row-major over the subsystems) into `re`/`im`.
///
/// # Safety
/// `ket` is a live handle; `re` and `im` are writable.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_amplitude(ket: *const QmaKet, index: usize, re: *mut f64, im: *mut f64) -> QmaStatus {
    guard(|| {
        let k = unsafe { ket.as_ref() }.ok_or_else(|| null("ket"))?;
        let a = *k.0.amplitudes().get(index).ok_or_else(|| Fail(QmaStatus::OutOfRange, format!("index {index} out of range")))?;
        unsafe {
            put(re, a.re)?;
            put(im, a.im)
        }
    })
}

/// # Safety
/// `a` and `b` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_tensor(a: *const QmaKet, b: *const QmaKet, out: *mut *mut QmaKet) -> QmaStatus {
    guard(|| {
        let a = unsafe { a.as_ref() }.ok_or_else(|| null("a"))?;
        let b = unsafe { b.as_ref() }.ok_or_else(|| null("b"))?;
        let t = a.0.tensor(&b.0)?;
        unsafe { put(out, Box::into_raw(Box::new(QmaKet(t)))) }
    })
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
///
/// # Safety
/// `a` and `b` are live handles; `re` and `im` are writable.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_inner(a: *const QmaKet, b: *const QmaKet, re: *mut f64, im: *mut f64) -> QmaStatus {
    guard(|| {
        let a = unsafe { a.as_ref() }.ok_or_else(|| null("a"))?;
        let b = unsafe { b.as_ref() }.ok_or_else(|| null("b"))?;
        let z = a.0.inner(&b.0)?;
        unsafe {
            put(re, z.re)?;
            put(im, z.im)
        }
    })
}

/// # Safety
/// `ket` came from this library and is not used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qma_ket_free(ket: *mut QmaKet) {
    if !ket.is_null() {
        drop(unsafe { Box::from_raw(ket) });
    }
}

/// Split `ket` into branches labeled by the named pointer subsystems.
///
/// # Safety
/// `ket` is live; `pointer` holds `n_pointer` strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_decompose(
    ket: *const QmaKet,
    pointer: *const *const c_char,
    n_pointer: usize,
    out: *mut *mut QmaBranchSet,
) -> QmaStatus {
    guard(|| {
        let k = unsafe { ket.as_ref() }.ok_or_else(|| null("ket"))?;
        let names = unsafe { read_names(pointer, n_pointer)? };
        let set = decompose(&k.0, &names)?;
        unsafe { put(out, Box::into_raw(Box::new(QmaBranchSet(set)))) }
    })
}

/// # Safety
/// `set` is a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qma_branchset_len(set: *const QmaBranchSet) -> usize {
    unsafe { set.as_ref() }.map_or(0, |s| s.0.len())
}

/// Number of pointer subsystems, i.e. the length of every label.
///
/// # Safety
/// `set` is a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qma_branchset_label_len(set: *const QmaBranchSet) -> usize {
    unsafe { set.as_ref() }.map_or(0, |s| s.0.pointer().len())
}

/// # Safety
/// `set` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_branchset_weight(set: *const QmaBranchSet, index: usize, out: *mut f64) -> QmaStatus {
    guard(|| {
        let s = unsafe { set.as_ref() }.ok_or_else(|| null("set"))?;
        let b = s.0.branches().get(index).ok_or_else(|| Fail(QmaStatus::OutOfRange, format!("branch {index} out of range")))?;
        unsafe { put(out, b.weight()) }
    })
}

/// Write the outcome indices of branch `index` into `out`, which must hold
/// `qma_branchset_label_len(set)` entries.
///
/// # Safety
/// `set` is live; `out` holds `capacity` writable entries.
#[no_mangle]
pub unsafe extern "C" fn qma_branchset_label(
    set: *const QmaBranchSet,
    index: usize,
    out: *mut usize,
    capacity: usize,
) -> QmaStatus {
    guard(|| {
        let s = unsafe { set.as_ref() }.ok_or_else(|| null("set"))?;
        let b = s.0.branches().get(index).ok_or_else(|| Fail(QmaStatus::OutOfRange, format!("branch {index} out of range")))?;
        let idx = b.label.indices();
        if capacity < idx.len() {
            return Err(Fail(QmaStatus::OutOfRange, format!("label needs {} entries, got {capacity}", idx.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { std::slice::from_raw_parts_mut(out, idx.len()) }.copy_from_slice(idx);
        Ok(())
    })
}

/// # Safety
/// `set` came from this library and is not used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qma_branchset_free(set: *mut QmaBranchSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Run a registered experiment. `params_json` is a JSON object or NULL for
/// defaults; `hbar <= 0` selects the built-in value.
///
/// # Safety
/// `name` and `params_json` are NUL-terminated or NULL; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_run_experiment(
    name: *const c_char,
    params_json: *const c_char,
    seed: u64,
    hbar: f64,
    out: *mut *mut QmaReport,
) -> QmaStatus {
    guard(|| {
        let name = unsafe { read_str(name, "name")? };
        let mut spec = ExperimentSpec::new(name, seed);
        if !params_json.is_null() {
            let text = unsafe { read_str(params_json, "params_json")? };
            spec.params = serde_json::from_str::<BTreeMap<String, serde_json::Value>>(text)
                .map_err(|e| Fail(QmaStatus::Config, format!("params: {e}")))?;
        }
        let mut constants = Constants::default();
        if hbar > 0.0 {
            constants.hbar = hbar;
        }
        let report = experiments::run(&spec, &constants)?;
        unsafe { put(out, Box::into_raw(Box::new(QmaReport(report)))) }
    })
}

/// The report as JSON. Free the string with [`qma_string_free`].
///
/// # Safety
/// `report` is live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_report_json(report: *const QmaReport, out: *mut *mut c_char) -> QmaStatus {
    guard(|| {
        let r = unsafe { report.as_ref() }.ok_or_else(|| null("report"))?;
        unsafe { put(out, into_c_string(r.0.to_json())) }
    })
}

/// True when every verdict passed. NULL yields false.
///
/// # Safety
/// `report` is a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qma_report_all_pass(report: *const QmaReport) -> bool {
    unsafe { report.as_ref() }.is_some_and(|r| r.0.all_pass())
}

/// # Safety
/// `report` came from this library and is not used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qma_report_free(report: *mut QmaReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// # Safety
/// `s` came from this library and is not used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn qma_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Order-of-magnitude packet width `sqrt(x0² + 2ħt/m)`.
#[no_mangle]
pub extern "C" fn qma_spread_estimate(x0: f64, t: f64, mass: f64, hbar: f64) -> f64 {
    qma_core::gridwave::spread_estimate(x0, t, mass, hbar)
}

/// Registered experiment names as a JSON array of strings.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn qma_list_experiments_json(out: *mut *mut c_char) -> QmaStatus {
    guard(|| {
        let names: Vec<&str> = experiments::registry().iter().map(|e| e.name).collect();
        let s = serde_json::to_string(&names).expect("names serialize");
        unsafe { put(out, into_c_string(s)) }
    })
}
