//! C ABI over the `partial-iht` solvers.
//!
//! Every fallible function returns a [`PihtStatus`]. On failure the message is
//! kept per thread and can be copied out with [`piht_last_error_message`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use partial_iht::data::{trial_rng, Budget, Environment, ObservationLedger, ProblemInstance, SyntheticSpec};
use partial_iht::experiment::{run_experiment, ExperimentConfig};
use partial_iht::metrics::Evaluator;
use partial_iht::optim::{run_exploration, BatchSchedule, RunTrace};
use partial_iht::sparse::{hard_threshold, DenseVector};
use partial_iht::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PihtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Data = 4,
    BudgetExceeded = 5,
    Io = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> PihtStatus {
    match err {
        Error::Config(_) | Error::InvalidBudget(_) => PihtStatus::Config,
        Error::Data(_) | Error::Csv(_) | Error::MalformedAggregate { .. } => PihtStatus::Data,
        Error::BudgetExceeded { .. } => PihtStatus::BudgetExceeded,
        Error::Io(_) => PihtStatus::Io,
        _ => PihtStatus::InvalidArgument,
    }
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (PihtStatus, String)>) -> PihtStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PihtStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            PihtStatus::Panic
        }
    }
}

fn lift<T>(r: partial_iht::Result<T>) -> Result<T, (PihtStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PihtStatus, String) {
    (PihtStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (PihtStatus, String) {
    (PihtStatus::InvalidArgument, msg.into())
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn piht_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Keeps the `s` largest-magnitude entries of `values[0..d]` (ties to the
/// smaller index) and writes the result to `out[0..d]`.
///
/// # Safety
/// `values` and `out` must each point to `d` doubles. They may alias.
#[no_mangle]
pub unsafe extern "C" fn piht_hard_threshold(
    values: *const f64,
    d: usize,
    s: usize,
    out: *mut f64,
) -> PihtStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = lift(DenseVector::new(std::slice::from_raw_parts(values, d).to_vec()))?;
        let h = lift(hard_threshold(&v, s))?;
        std::slice::from_raw_parts_mut(out, d).copy_from_slice(h.as_slice());
        Ok(())
    })
}

/// A synthetic regression problem with known optimum.
pub struct PihtInstance {
    inner: ProblemInstance,
}

/// Builds a synthetic instance: `s_star` coefficients of size `amplitude`,
/// label noise `sigma`. Features are standard normal when `uniform_bound <= 0`
/// and uniform on `[-uniform_bound, uniform_bound]` otherwise.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn piht_instance_synthetic(
    d: usize,
    s_star: usize,
    amplitude: f64,
    sigma: f64,
    uniform_bound: f64,
    out: *mut *mut PihtInstance,
) -> PihtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = SyntheticSpec {
            d,
            s_star,
            amplitude,
            sigma,
            uniform_bound: (uniform_bound > 0.0).then_some(uniform_bound),
        };
        let inner = lift(spec.build())?;
        *out = Box::into_raw(Box::new(PihtInstance { inner }));
        Ok(())
    })
}

/// Dimension of the instance, 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn piht_instance_dim(inst: *const PihtInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.dim())
}

/// Writes the instance optimum to `out[0..d]`.
///
/// # Safety
/// `inst` must be a live handle and `out` must point to `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn piht_instance_theta_star(inst: *const PihtInstance, out: *mut f64) -> PihtStatus {
    guard(|| {
        let inst = inst.as_ref().ok_or_else(|| null("inst"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ts = inst.inner.theta_star().ok_or_else(|| invalid("instance has no known optimum"))?;
        std::slice::from_raw_parts_mut(out, ts.len()).copy_from_slice(ts.as_slice());
        Ok(())
    })
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn piht_instance_free(inst: *mut PihtInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Result of one solver run: final iterate plus the per-update trace.
pub struct PihtRun {
    trace: RunTrace,
    max_attributes: usize,
}

/// Runs exploration from zero with a constant batch size. Metrics are taken
/// on `test_size` fresh rows every `eval_every` updates.
///
/// # Safety
/// `inst` must be a live handle and `out` a valid pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn piht_run_exploration(
    inst: *const PihtInstance,
    s: usize,
    s_prime: usize,
    eta: f64,
    batch: usize,
    iterations: usize,
    test_size: usize,
    eval_every: usize,
    seed: u64,
    out: *mut *mut PihtRun,
) -> PihtStatus {
    guard(|| {
        let inst = &inst.as_ref().ok_or_else(|| null("inst"))?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let s_star = inst.theta_star().map_or(1, |t| t.nnz().max(1));
        let budget = lift(Budget::new(inst.dim(), s_star.min(s), s, s_prime))?;
        let eval = (test_size > 0).then(|| {
            let rows = inst.test_rows(test_size, &mut trial_rng(seed, 0, 1));
            Evaluator::new(inst, rows, s_prime, eval_every.max(1))
        });
        let mut env = Environment::new(inst, trial_rng(seed, 0, 0), ObservationLedger::new(s_prime));
        let (_, trace) = lift(run_exploration(
            &DenseVector::zeros(inst.dim()),
            eta,
            &budget,
            &BatchSchedule::Constant(batch),
            iterations,
            &mut env,
            eval.as_ref(),
        ))?;
        let max_attributes = env.ledger().max_per_example();
        *out = Box::into_raw(Box::new(PihtRun { trace, max_attributes }));
        Ok(())
    })
}

/// Number of trace records, including the initial one.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn piht_run_len(run: *const PihtRun) -> usize {
    run.as_ref().map_or(0, |r| r.trace.records.len())
}

/// Largest number of attributes read from any single example.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn piht_run_max_attributes(run: *const PihtRun) -> usize {
    run.as_ref().map_or(0, |r| r.max_attributes)
}

/// Fills `cum_examples` and `test_mse` for record `index`. `test_mse` is NaN
/// where no metrics were taken.
///
/// # Safety
/// `run` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn piht_run_record(
    run: *const PihtRun,
    index: usize,
    cum_examples: *mut u64,
    test_mse: *mut f64,
) -> PihtStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if cum_examples.is_null() || test_mse.is_null() {
            return Err(null("out"));
        }
        let r = run
            .trace
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range")))?;
        *cum_examples = r.cum_examples;
        *test_mse = r.metrics.map_or(f64::NAN, |m| m.test_mse);
        Ok(())
    })
}

/// Writes the final iterate to `out[0..d]`.
///
/// # Safety
/// `run` must be a live handle and `out` must point to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn piht_run_theta(run: *const PihtRun, out: *mut f64, d: usize) -> PihtStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let theta = run.trace.final_theta.as_slice();
        if theta.len() != d {
            return Err(invalid(format!("expected d = {}, got {d}", theta.len())));
        }
        std::slice::from_raw_parts_mut(out, d).copy_from_slice(theta);
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn piht_run_free(run: *mut PihtRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Runs the experiment described by a TOML document and writes its outputs.
/// `mean_final_test_mse` may be null.
///
/// # Safety
/// `toml` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn piht_experiment_run(toml: *const c_char, mean_final_test_mse: *mut f64) -> PihtStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| (PihtStatus::Config, e.to_string()))?;
        let cfg = lift(ExperimentConfig::from_toml_str(text))?;
        let summary = lift(run_experiment(&cfg))?;
        if !mean_final_test_mse.is_null() {
            *mean_final_test_mse = summary.mean_final_test_mse;
        }
        Ok(())
    })
}
