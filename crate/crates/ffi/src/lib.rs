//! C ABI over the `ebnc` crate.
//!
//! Handles are opaque pointers created by `*_new`/`*_parse` functions and
//! released by the matching `*_free`. Every fallible call returns an
//! [`EbncStatus`]; on failure `ebnc_last_error` describes the cause on the
//! calling thread. Strings returned by the library are freed with
//! `ebnc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ebnc::dataset::Dataset;
use ebnc::dimension::{self, DimensionReport, DEFAULT_ROW_CAP};
use ebnc::ebnc::Ebnc;
use ebnc::network::{parse_network, write_network, BayesianNetwork};
use ebnc::scoring::{bic_local, laplace_local, FitOptions, LocalModel, ScoreOptions};
use ebnc::{Error, ErrorKind};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Data = 4,
    Network = 5,
    CapExceeded = 6,
    Dimension = 7,
    Fit = 8,
    Verification = 9,
    InvalidArgument = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbncMethod {
    /// Blockwise when every variable is binary, else global.
    Auto = 0,
    Global = 1,
    Blockwise = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EbncScoreMethod {
    Bic = 0,
    Laplace = 1,
}

/// A validated Bayesian network.
pub struct EbncNetwork(BayesianNetwork);

/// A classifier: an inner network plus a designated class node.
pub struct EbncClassifier(Ebnc);

/// A complete dataset bound to a network's schema.
pub struct EbncDataset(Dataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: EbncStatus, msg: impl Into<String>) -> EbncStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> EbncStatus {
    let status = match e.kind() {
        ErrorKind::Io => EbncStatus::Io,
        ErrorKind::Data => EbncStatus::Data,
        ErrorKind::Network => EbncStatus::Network,
        ErrorKind::Cap => EbncStatus::CapExceeded,
        ErrorKind::Dimension => EbncStatus::Dimension,
        ErrorKind::Fit => EbncStatus::Fit,
        ErrorKind::Verification => EbncStatus::Verification,
        ErrorKind::Argument => EbncStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

/// Runs `body`, converting panics and errors to a status.
fn guard(body: impl FnOnce() -> Result<(), EbncStatus>) -> EbncStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EbncStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(EbncStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn text<'a>(s: *const c_char) -> Result<&'a str, EbncStatus> {
    if s.is_null() {
        return Err(fail(EbncStatus::NullPointer, "string argument is null"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(EbncStatus::InvalidUtf8, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, EbncStatus> {
    p.as_ref()
        .ok_or_else(|| fail(EbncStatus::NullPointer, format!("{what} handle is null")))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, EbncStatus> {
    p.as_mut()
        .ok_or_else(|| fail(EbncStatus::NullPointer, "output pointer is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], EbncStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(EbncStatus::NullPointer, "array argument is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, EbncStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(EbncStatus::InvalidArgument, "report contains a nul byte"))
}

fn cap(rows: u64) -> u128 {
    if rows == 0 {
        DEFAULT_ROW_CAP
    } else {
        rows as u128
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ebnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ebnc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a network from its text format.
///
/// # Safety
/// `source` must be a nul-terminated string; `out_network` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_network_parse(
    source: *const c_char,
    out_network: *mut *mut EbncNetwork,
) -> EbncStatus {
    guard(|| {
        let slot = out(out_network)?;
        *slot = ptr::null_mut();
        let net = parse_network(text(source)?).map_err(from_error)?;
        *slot = Box::into_raw(Box::new(EbncNetwork(net)));
        Ok(())
    })
}

/// # Safety
/// `network` must come from `ebnc_network_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_network_free(network: *mut EbncNetwork) {
    if !network.is_null() {
        drop(Box::from_raw(network));
    }
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `network` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_network_variable_count(network: *const EbncNetwork) -> usize {
    network.as_ref().map_or(0, |n| n.0.len())
}

/// Serializes the network back to its text format.
///
/// # Safety
/// `network` must be a live handle; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_network_to_text(
    network: *const EbncNetwork,
    out_text: *mut *mut c_char,
) -> EbncStatus {
    guard(|| {
        let slot = out(out_text)?;
        *slot = ptr::null_mut();
        *slot = into_c_string(write_network(&handle(network, "network")?.0))?;
        Ok(())
    })
}

/// Builds a classifier for the variable `class_name` of `network`. The
/// network is copied; the handle may be freed afterwards.
///
/// # Safety
/// `network` must be a live handle, `class_name` a nul-terminated string and
/// `out_classifier` writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_new(
    network: *const EbncNetwork,
    class_name: *const c_char,
    out_classifier: *mut *mut EbncClassifier,
) -> EbncStatus {
    guard(|| {
        let slot = out(out_classifier)?;
        *slot = ptr::null_mut();
        let net = handle(network, "network")?.0.clone();
        let e = Ebnc::with_class_name(net, text(class_name)?).map_err(from_error)?;
        *slot = Box::into_raw(Box::new(EbncClassifier(e)));
        Ok(())
    })
}

/// # Safety
/// `classifier` must come from `ebnc_classifier_new` or be null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_free(classifier: *mut EbncClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}

/// Number of inputs, or 0 for a null handle.
///
/// # Safety
/// `classifier` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_input_count(classifier: *const EbncClassifier) -> usize {
    classifier.as_ref().map_or(0, |c| c.0.input_nodes().len())
}

/// Number of class states, or 0 for a null handle.
///
/// # Safety
/// `classifier` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_class_states(classifier: *const EbncClassifier) -> usize {
    classifier.as_ref().map_or(0, |c| c.0.class_states())
}

unsafe fn eval(
    classifier: *const EbncClassifier,
    x: *const usize,
    x_len: usize,
    out_values: *mut f64,
    out_len: usize,
    f: impl FnOnce(&Ebnc, &[usize]) -> ebnc::Result<Vec<f64>>,
) -> EbncStatus {
    guard(|| {
        let e = &handle(classifier, "classifier")?.0;
        let values = f(e, slice(x, x_len)?).map_err(from_error)?;
        if out_len < values.len() {
            return Err(fail(
                EbncStatus::BufferTooSmall,
                format!("need {} values, buffer holds {out_len}", values.len()),
            ));
        }
        if out_values.is_null() {
            return Err(fail(EbncStatus::NullPointer, "output buffer is null"));
        }
        std::slice::from_raw_parts_mut(out_values, values.len()).copy_from_slice(&values);
        Ok(())
    })
}

/// Writes the `r − 1` log odds of each class state against state 0 for the
/// input states `x` (in input order).
///
/// # Safety
/// `x` must hold `x_len` values and `out_values` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_log_odds(
    classifier: *const EbncClassifier,
    x: *const usize,
    x_len: usize,
    out_values: *mut f64,
    out_len: usize,
) -> EbncStatus {
    eval(classifier, x, x_len, out_values, out_len, |e, x| {
        e.log_odds(x)
    })
}

/// Writes the `r` class probabilities given input states `x`.
///
/// # Safety
/// `x` must hold `x_len` values and `out_values` room for `out_len`.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_posterior(
    classifier: *const EbncClassifier,
    x: *const usize,
    x_len: usize,
    out_values: *mut f64,
    out_len: usize,
) -> EbncStatus {
    eval(classifier, x, x_len, out_values, out_len, |e, x| {
        e.conditional_distribution(x)
    })
}

/// Most probable class state given input states `x`.
///
/// # Safety
/// `x` must hold `x_len` values; `out_state` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_classifier_classify(
    classifier: *const EbncClassifier,
    x: *const usize,
    x_len: usize,
    out_state: *mut usize,
) -> EbncStatus {
    guard(|| {
        let e = &handle(classifier, "classifier")?.0;
        let k = e.classify(slice(x, x_len)?).map_err(from_error)?;
        *out(out_state)? = k;
        Ok(())
    })
}

fn report(e: &Ebnc, method: EbncMethod, rows: u64) -> ebnc::Result<DimensionReport> {
    match method {
        EbncMethod::Auto => dimension::dimension(e, cap(rows)),
        EbncMethod::Global => dimension::dimension_global(e, cap(rows)),
        EbncMethod::Blockwise => dimension::dimension_blockwise(e, cap(rows)),
    }
}

/// Model dimension of the classifier. `cap_rows` of 0 selects the default
/// cap.
///
/// # Safety
/// `classifier` must be a live handle; `out_dimension` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_dimension(
    classifier: *const EbncClassifier,
    method: EbncMethod,
    cap_rows: u64,
    out_dimension: *mut usize,
) -> EbncStatus {
    guard(|| {
        let e = &handle(classifier, "classifier")?.0;
        *out(out_dimension)? = report(e, method, cap_rows).map_err(from_error)?.dimension;
        Ok(())
    })
}

/// Dimension report as text: method, `d`, block ranks and the basis.
/// Free the result with `ebnc_string_free`.
///
/// # Safety
/// `classifier` must be a live handle; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_dimension_report(
    classifier: *const EbncClassifier,
    method: EbncMethod,
    cap_rows: u64,
    out_text: *mut *mut c_char,
) -> EbncStatus {
    guard(|| {
        let slot = out(out_text)?;
        *slot = ptr::null_mut();
        let e = &handle(classifier, "classifier")?.0;
        *slot = into_c_string(report(e, method, cap_rows).map_err(from_error)?.to_text())?;
        Ok(())
    })
}

/// Parses CSV text (header row, state labels) against the variables of
/// `network`.
///
/// # Safety
/// `network` must be a live handle, `csv` a nul-terminated string and
/// `out_dataset` writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_dataset_parse(
    network: *const EbncNetwork,
    csv: *const c_char,
    out_dataset: *mut *mut EbncDataset,
) -> EbncStatus {
    guard(|| {
        let slot = out(out_dataset)?;
        *slot = ptr::null_mut();
        let net = &handle(network, "network")?.0;
        let data = Dataset::parse_csv(text(csv)?, net.variables()).map_err(from_error)?;
        *slot = Box::into_raw(Box::new(EbncDataset(data)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from `ebnc_dataset_parse` or be null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_dataset_free(dataset: *mut EbncDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ebnc_dataset_len(dataset: *const EbncDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// Local score of the classifier's class node on `dataset`: BIC, or the
/// Laplace approximation under the default prior. `restarts` random starts
/// follow the zero start, drawn from `seed`.
///
/// # Safety
/// Handles must be live; `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ebnc_score(
    classifier: *const EbncClassifier,
    dataset: *const EbncDataset,
    method: EbncScoreMethod,
    restarts: usize,
    seed: u64,
    out_score: *mut f64,
) -> EbncStatus {
    guard(|| {
        let e = handle(classifier, "classifier")?.0.clone();
        let data = &handle(dataset, "dataset")?.0;
        let slot = out(out_score)?;
        let opts = ScoreOptions {
            fit: FitOptions {
                restarts,
                seed,
                ..FitOptions::default()
            },
            ..ScoreOptions::default()
        };
        let local = LocalModel::new(e, opts.cap).map_err(from_error)?;
        let s = match method {
            EbncScoreMethod::Bic => bic_local(&local, data, &opts),
            EbncScoreMethod::Laplace => laplace_local(&local, data, &opts),
        }
        .map_err(from_error)?;
        *slot = s.score;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_statuses() {
        assert_eq!(from_error(Error::TooLarge(3)), EbncStatus::CapExceeded);
        assert_eq!(from_error(Error::InvalidAlpha), EbncStatus::Fit);
        assert_eq!(
            from_error(Error::SchemaMismatch("x".into())),
            EbncStatus::Data
        );
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, EbncStatus::Panic);
        let msg = unsafe { CStr::from_ptr(ebnc_last_error()) };
        assert!(msg.to_str().unwrap().contains("boom"));
    }

    #[test]
    fn zero_cap_selects_default() {
        assert_eq!(cap(0), DEFAULT_ROW_CAP);
        assert_eq!(cap(7), 7);
    }
}
