//! C ABI for the slres simulator.
//!
//! Exposes the pieces other languages most plausibly want to drive: building
//! an experiment from a configuration file or string, running it for the
//! train/test NRMSE pair, the NARMA10 reference recurrence and the NRMSE
//! metric. Handles are opaque; every call returns an `SlresStatus` code and
//! the last error message is retrievable per thread. The matching header is
//! maintained by hand at `include/slres.h` and checked by tests.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use slres::config::{self, ConfigMap};
use slres::error::Error;
use slres::experiment_harness::{run_single, ScanSpec, TaskSource};
use slres::tasks::{load_santa_fe_with_split, narma10};

/// Status codes mirrored in include/slres.h.
pub const SLRES_OK: c_int = 0;
pub const SLRES_ERR_NULL_ARGUMENT: c_int = 1;
pub const SLRES_ERR_CONFIG: c_int = 2;
pub const SLRES_ERR_MISSING_DATA: c_int = 3;
pub const SLRES_ERR_NUMERICAL: c_int = 4;
pub const SLRES_ERR_UTF8: c_int = 5;
pub const SLRES_ERR_PANIC: c_int = 6;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: Vec<u8> = msg.bytes().filter(|&b| b != 0).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> c_int {
    match e.exit_code() {
        2 => SLRES_ERR_CONFIG,
        3 => SLRES_ERR_MISSING_DATA,
        _ => SLRES_ERR_NUMERICAL,
    }
}

fn fail(e: &Error) -> c_int {
    set_error(&e.to_string());
    status_of(e)
}

/// Experiment: a fully-resolved scan spec plus preloaded task data.
pub struct SlresExperiment {
    spec: ScanSpec,
}

fn build_experiment(text: &str) -> Result<SlresExperiment, Error> {
    let mut cfg = ConfigMap::from_text(text)?;
    let spec = config::resolve_scan(&mut cfg)?;
    cfg.finish()?;
    Ok(SlresExperiment { spec })
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, c_int> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(SLRES_ERR_NULL_ARGUMENT);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        SLRES_ERR_UTF8
    })
}

fn guard<F: FnOnce() -> c_int>(f: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            SLRES_ERR_PANIC
        }
    }
}

/// Library version as a static string; never freed by the caller.
#[no_mangle]
pub extern "C" fn slres_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent error on this thread. Valid until the next
/// failing call on the same thread; never freed by the caller.
#[no_mangle]
pub extern "C" fn slres_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build an experiment from a flat `key = value` configuration string (same
/// format as `slres --config` files). Returns NULL on error.
///
/// # Safety
/// `text` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn slres_experiment_from_string(
    text: *const c_char,
) -> *mut SlresExperiment {
    let mut out: *mut SlresExperiment = std::ptr::null_mut();
    guard(|| {
        let text = match cstr_arg(text) {
            Ok(t) => t,
            Err(code) => return code,
        };
        match build_experiment(text) {
            Ok(exp) => {
                out = Box::into_raw(Box::new(exp));
                SLRES_OK
            }
            Err(e) => fail(&e),
        }
    });
    out
}

/// Build an experiment from a configuration file path. Returns NULL on error.
///
/// # Safety
/// `path` must be a valid NUL-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn slres_experiment_from_file(path: *const c_char) -> *mut SlresExperiment {
    let mut out: *mut SlresExperiment = std::ptr::null_mut();
    guard(|| {
        let path = match cstr_arg(path) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(&Error::io(PathBuf::from(path), e)),
        };
        match build_experiment(&text) {
            Ok(exp) => {
                out = Box::into_raw(Box::new(exp));
                SLRES_OK
            }
            Err(e) => fail(&e),
        }
    });
    out
}

/// Run one train/test experiment at the configured (lambda, phi) point and
/// write the train and test NRMSE through the out-pointers.
///
/// # Safety
/// `exp` must come from `slres_experiment_from_*` and not have been freed;
/// `nrmse_train` / `nrmse_test` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn slres_experiment_run(
    exp: *const SlresExperiment,
    nrmse_train: *mut c_double,
    nrmse_test: *mut c_double,
) -> c_int {
    guard(|| {
        if exp.is_null() || nrmse_train.is_null() || nrmse_test.is_null() {
            set_error("null argument");
            return SLRES_ERR_NULL_ARGUMENT;
        }
        let exp = &*exp;
        let point = exp.spec.base.clone();
        let outcome = match exp.spec.task {
            slres::experiment_harness::TaskKind::Narma10 => {
                run_single(&point, TaskSource::Narma)
            }
            slres::experiment_harness::TaskKind::SantaFe => {
                let path = match &exp.spec.santa_fe_path {
                    Some(p) => p.clone(),
                    None => {
                        return fail(&Error::MissingData(
                            "Santa Fe task requested but santa_fe_path is not configured".into(),
                        ))
                    }
                };
                match load_santa_fe_with_split(&path, point.split) {
                    Ok(data) => run_single(&point, TaskSource::SantaFe(&data)),
                    Err(e) => return fail(&e),
                }
            }
        };
        match outcome {
            Ok(r) => {
                *nrmse_train = r.nrmse_train;
                *nrmse_test = r.nrmse_test;
                SLRES_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Free an experiment handle. NULL is a no-op.
///
/// # Safety
/// `exp` must come from `slres_experiment_from_*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn slres_experiment_free(exp: *mut SlresExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// NARMA10 recurrence over `len` inputs in [0, 1]; writes `len` targets
/// (A_1..A_len). Fails with SLRES_ERR_NUMERICAL if the recurrence diverges.
///
/// # Safety
/// `u` must point to `len` readable doubles and `out` to `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn slres_narma10(
    u: *const c_double,
    len: usize,
    out: *mut c_double,
) -> c_int {
    guard(|| {
        if u.is_null() || out.is_null() {
            set_error("null argument");
            return SLRES_ERR_NULL_ARGUMENT;
        }
        let inputs = std::slice::from_raw_parts(u, len);
        match narma10(inputs) {
            Ok(series) => {
                let targets = &series[1..];
                std::slice::from_raw_parts_mut(out, len).copy_from_slice(targets);
                SLRES_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// NRMSE between a target and a prediction of equal length.
///
/// # Safety
/// `y` and `y_hat` must point to `len` readable doubles, `out` to one
/// writable double.
#[no_mangle]
pub unsafe extern "C" fn slres_nrmse(
    y: *const c_double,
    y_hat: *const c_double,
    len: usize,
    out: *mut c_double,
) -> c_int {
    guard(|| {
        if y.is_null() || y_hat.is_null() || out.is_null() {
            set_error("null argument");
            return SLRES_ERR_NULL_ARGUMENT;
        }
        let y = std::slice::from_raw_parts(y, len);
        let y_hat = std::slice::from_raw_parts(y_hat, len);
        match slres::readout::nrmse(y, y_hat) {
            Ok(v) => {
                *out = v;
                SLRES_OK
            }
            Err(e) => fail(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn version_is_nul_terminated_static() {
        let v = unsafe { CStr::from_ptr(slres_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn narma_and_nrmse_through_the_abi() {
        let u = vec![0.0f64; 500];
        let mut out = vec![0.0f64; 500];
        let code = unsafe { slres_narma10(u.as_ptr(), 500, out.as_mut_ptr()) };
        assert_eq!(code, SLRES_OK);
        assert!((out[499] - (0.7 - 0.29f64.sqrt())).abs() < 1e-9);

        let mut metric = 0.0f64;
        let code = unsafe { slres_nrmse(out.as_ptr(), out.as_ptr(), 500, &mut metric) };
        assert_eq!(code, SLRES_OK);
        assert!(metric < 1e-12);
    }

    #[test]
    fn null_arguments_are_rejected() {
        let mut metric = 0.0f64;
        let code = unsafe { slres_nrmse(std::ptr::null(), std::ptr::null(), 3, &mut metric) };
        assert_eq!(code, SLRES_ERR_NULL_ARGUMENT);
        let msg = unsafe { CStr::from_ptr(slres_last_error()) };
        assert!(!msg.to_bytes().is_empty());
    }

    #[test]
    fn experiment_lifecycle() {
        let conf = CString::new(
            "n_real = 2\nn_virtual = 4\ntau = 68\nbuffer_len = 5\ntrain_len = 30\ntest_len = 15\nlambda = 0.02\nphi = 0.8\n",
        )
        .unwrap();
        let exp = unsafe { slres_experiment_from_string(conf.as_ptr()) };
        assert!(!exp.is_null());
        let (mut tr, mut te) = (0.0f64, 0.0f64);
        let code = unsafe { slres_experiment_run(exp, &mut tr, &mut te) };
        assert_eq!(code, SLRES_OK, "{:?}", unsafe {
            CStr::from_ptr(slres_last_error()).to_str()
        });
        assert!(tr.is_finite() && te.is_finite());
        assert!(te > 0.0);
        unsafe { slres_experiment_free(exp) };
    }

    #[test]
    fn bad_config_yields_config_status_and_message() {
        let conf = CString::new("kappa = banana\n").unwrap();
        let exp = unsafe { slres_experiment_from_string(conf.as_ptr()) };
        assert!(exp.is_null());
        let msg = unsafe { CStr::from_ptr(slres_last_error()) };
        assert!(msg.to_str().unwrap().contains("kappa"));
    }

    #[test]
    fn header_lists_every_exported_symbol() {
        let header = include_str!("../include/slres.h");
        for symbol in [
            "slres_version",
            "slres_last_error",
            "slres_experiment_from_string",
            "slres_experiment_from_file",
            "slres_experiment_run",
            "slres_experiment_free",
            "slres_narma10",
            "slres_nrmse",
        ] {
            assert!(header.contains(symbol), "header misses {symbol}");
        }
        for (name, value) in [
            ("SLRES_OK", SLRES_OK),
            ("SLRES_ERR_NULL_ARGUMENT", SLRES_ERR_NULL_ARGUMENT),
            ("SLRES_ERR_CONFIG", SLRES_ERR_CONFIG),
            ("SLRES_ERR_MISSING_DATA", SLRES_ERR_MISSING_DATA),
            ("SLRES_ERR_NUMERICAL", SLRES_ERR_NUMERICAL),
            ("SLRES_ERR_UTF8", SLRES_ERR_UTF8),
            ("SLRES_ERR_PANIC", SLRES_ERR_PANIC),
        ] {
            assert!(
                header.contains(&format!("{name} {value}")),
                "header misses {name} = {value}"
            );
        }
    }
}
