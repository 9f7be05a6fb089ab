//! C ABI for tjpf.
//!
//! All objects are opaque handles created by `*_new`/`*_from_*` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`TjpfStatus`]; on failure, [`tjpf_last_error`] describes the most recent
//! error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use tjpf::harness::{self, ExperimentConfig, HarnessError, RunMetrics};
use tjpf::lorenz63::{Lorenz63, Lorenz63Params};
use tjpf::{ForwardModel, NoiseIncrement, StateVector};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TjpfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Filter = 4,
    Model = 5,
    Io = 6,
    Panic = 7,
}

/// A validated experiment configuration.
pub struct TjpfExperiment {
    cfg: ExperimentConfig,
}

/// Results of a finished run.
pub struct TjpfRun {
    cfg: ExperimentConfig,
    metrics: RunMetrics,
}

/// A stochastic Lorenz '63 model.
pub struct TjpfLorenz63 {
    model: Lorenz63,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

fn fail(status: TjpfStatus, msg: impl Into<String>) -> TjpfStatus {
    set_error(msg);
    status
}

fn harness_status(e: &HarnessError) -> TjpfStatus {
    match e.exit_code() {
        2 => TjpfStatus::Config,
        3 => TjpfStatus::Filter,
        4 => TjpfStatus::Model,
        _ => TjpfStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> TjpfStatus) -> TjpfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == TjpfStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(TjpfStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, TjpfStatus> {
    if p.is_null() {
        return Err(fail(TjpfStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TjpfStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Message of the last error on this thread; empty after a successful call.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tjpf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tjpf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store_experiment(cfg: Result<ExperimentConfig, HarnessError>, out: *mut *mut TjpfExperiment) -> TjpfStatus {
    match cfg.and_then(|c| c.validate().map(|_| c).map_err(HarnessError::from)) {
        Ok(cfg) => {
            unsafe { *out = Box::into_raw(Box::new(TjpfExperiment { cfg })) };
            TjpfStatus::Ok
        }
        Err(e) => fail(harness_status(&e), e.to_string()),
    }
}

/// Parses a JSON experiment configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_from_json(json: *const c_char, out: *mut *mut TjpfExperiment) -> TjpfStatus {
    guard(|| {
        if out.is_null() {
            return fail(TjpfStatus::NullPointer, "null output pointer");
        }
        let s = match str_arg(json) {
            Ok(s) => s,
            Err(e) => return e,
        };
        store_experiment(ExperimentConfig::from_json(s), out)
    })
}

/// Looks up a named preset.
///
/// # Safety
/// `name` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_from_preset(name: *const c_char, out: *mut *mut TjpfExperiment) -> TjpfStatus {
    guard(|| {
        if out.is_null() {
            return fail(TjpfStatus::NullPointer, "null output pointer");
        }
        let s = match str_arg(name) {
            Ok(s) => s,
            Err(e) => return e,
        };
        store_experiment(harness::preset(s), out)
    })
}

/// Sets the truth seed and derives the ensemble seed from it.
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_set_seed(exp: *mut TjpfExperiment, seed: u64) -> TjpfStatus {
    guard(|| match exp.as_mut() {
        Some(e) => {
            e.cfg = e.cfg.clone().with_seed(seed);
            TjpfStatus::Ok
        }
        None => fail(TjpfStatus::NullPointer, "null experiment"),
    })
}

/// Overrides the run length. Must stay at least one assimilation interval.
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_set_steps(exp: *mut TjpfExperiment, steps: usize) -> TjpfStatus {
    guard(|| match exp.as_mut() {
        Some(e) => {
            let mut c = e.cfg.clone();
            c.steps = steps;
            match c.validate() {
                Ok(()) => {
                    e.cfg = c;
                    TjpfStatus::Ok
                }
                Err(err) => fail(TjpfStatus::Config, err.to_string()),
            }
        }
        None => fail(TjpfStatus::NullPointer, "null experiment"),
    })
}

/// Writes the configuration as JSON into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full length needed, excluding the NUL, in `needed`.
///
/// # Safety
/// `exp` must be a live handle; `buf` may be null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_to_json(
    exp: *const TjpfExperiment,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> TjpfStatus {
    guard(|| {
        let Some(e) = exp.as_ref() else {
            return fail(TjpfStatus::NullPointer, "null experiment");
        };
        let s = e.cfg.to_json();
        if !needed.is_null() {
            *needed = s.len();
        }
        if len > 0 {
            if buf.is_null() {
                return fail(TjpfStatus::NullPointer, "null buffer");
            }
            let n = s.len().min(len - 1);
            ptr::copy_nonoverlapping(s.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        TjpfStatus::Ok
    })
}

/// # Safety
/// `exp` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_free(exp: *mut TjpfExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs the experiment. On a filter or model failure the partial outputs
/// are written (when an output directory is set) and no run handle is made.
///
/// # Safety
/// `exp` must be a live handle; `out_dir` null or a NUL-terminated path;
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tjpf_experiment_run(
    exp: *const TjpfExperiment,
    out_dir: *const c_char,
    out: *mut *mut TjpfRun,
) -> TjpfStatus {
    guard(|| {
        let Some(e) = exp.as_ref() else {
            return fail(TjpfStatus::NullPointer, "null experiment");
        };
        if out.is_null() {
            return fail(TjpfStatus::NullPointer, "null output pointer");
        }
        let mut cfg = e.cfg.clone();
        if !out_dir.is_null() {
            match str_arg(out_dir) {
                Ok(s) => cfg.output_dir = Some(PathBuf::from(s)),
                Err(s) => return s,
            }
        }
        match harness::run_experiment(&cfg) {
            Ok(metrics) => {
                *out = Box::into_raw(Box::new(TjpfRun { cfg, metrics }));
                TjpfStatus::Ok
            }
            Err(err) => fail(harness_status(&err), err.to_string()),
        }
    })
}

/// Number of recorded steps.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_len(run: *const TjpfRun) -> usize {
    run.as_ref().map_or(0, |r| r.metrics.rmse.len())
}

/// Number of assimilation times.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_n_analyses(run: *const TjpfRun) -> usize {
    run.as_ref().map_or(0, |r| r.metrics.traces.len())
}

unsafe fn copy_series(src: &[f64], dst: *mut f64, len: usize) -> TjpfStatus {
    if dst.is_null() {
        return fail(TjpfStatus::NullPointer, "null buffer");
    }
    if len < src.len() {
        return fail(TjpfStatus::InvalidArgument, format!("buffer holds {len}, need {}", src.len()));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    TjpfStatus::Ok
}

/// Copies the per-step full-state RMSE into `dst` (at least `tjpf_run_len`
/// values).
///
/// # Safety
/// `run` must be a live handle, `dst` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_rmse(run: *const TjpfRun, dst: *mut f64, len: usize) -> TjpfStatus {
    guard(|| match run.as_ref() {
        Some(r) => copy_series(&r.metrics.rmse, dst, len),
        None => fail(TjpfStatus::NullPointer, "null run"),
    })
}

/// Copies the per-step ensemble spread into `dst`.
///
/// # Safety
/// `run` must be a live handle, `dst` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_es(run: *const TjpfRun, dst: *mut f64, len: usize) -> TjpfStatus {
    guard(|| match run.as_ref() {
        Some(r) => copy_series(&r.metrics.es, dst, len),
        None => fail(TjpfStatus::NullPointer, "null run"),
    })
}

/// Writes all output files of the run into `dir`.
///
/// # Safety
/// `run` must be a live handle, `dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_write(run: *const TjpfRun, dir: *const c_char) -> TjpfStatus {
    guard(|| {
        let Some(r) = run.as_ref() else {
            return fail(TjpfStatus::NullPointer, "null run");
        };
        let d = match str_arg(dir) {
            Ok(s) => PathBuf::from(s),
            Err(s) => return s,
        };
        match harness::write_outputs(&d, &r.cfg, &r.metrics) {
            Ok(()) => TjpfStatus::Ok,
            Err(e) => fail(harness_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tjpf_run_free(run: *mut TjpfRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Creates a Lorenz '63 model `dx = alpha (y - x)`, `dy = (beta - z) x - y`,
/// `dz = x y - gamma z`,
/// step `dt` and additive model-error std `sigma`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tjpf_lorenz63_new(
    alpha: f64,
    beta: f64,
    gamma: f64,
    dt: f64,
    sigma: f64,
    out: *mut *mut TjpfLorenz63,
) -> TjpfStatus {
    guard(|| {
        if out.is_null() {
            return fail(TjpfStatus::NullPointer, "null output pointer");
        }
        let params = Lorenz63Params {
            alpha,
            beta,
            gamma,
            dt,
            model_error_std: sigma,
        };
        match Lorenz63::new(params) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TjpfLorenz63 { model }));
                TjpfStatus::Ok
            }
            Err(e) => fail(TjpfStatus::Config, e.to_string()),
        }
    })
}

/// One stochastic step: `next = M(state, noise)` with `noise` three
/// standard normals (pass null for a deterministic RK4 step).
///
/// # Safety
/// `model` must be a live handle; `state` and `next` valid for 3 doubles;
/// `noise` null or valid for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn tjpf_lorenz63_step(
    model: *const TjpfLorenz63,
    state: *const f64,
    noise: *const f64,
    next: *mut f64,
) -> TjpfStatus {
    guard(|| {
        let Some(m) = model.as_ref() else {
            return fail(TjpfStatus::NullPointer, "null model");
        };
        if state.is_null() || next.is_null() {
            return fail(TjpfStatus::NullPointer, "null state buffer");
        }
        let x = StateVector(std::slice::from_raw_parts(state, 3).to_vec());
        let w = if noise.is_null() {
            NoiseIncrement::zeros(3)
        } else {
            NoiseIncrement(std::slice::from_raw_parts(noise, 3).to_vec())
        };
        match m.model.step(&x, &w) {
            Ok(y) => {
                ptr::copy_nonoverlapping(y.as_ptr(), next, 3);
                TjpfStatus::Ok
            }
            Err(e) => fail(TjpfStatus::Model, e.to_string()),
        }
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tjpf_lorenz63_free(model: *mut TjpfLorenz63) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
