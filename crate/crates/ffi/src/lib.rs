//! C ABI for the dpsim selection mechanisms.
//!
//! The surface mirrors the core mechanism operations: sensitivity bounding,
//! closed-form selection distributions, single selections, Monte Carlo
//! estimation, the ε-DP ratio verifier, and expected values. Random state
//! lives behind an opaque [`DpsimRng`] handle so callers control determinism
//! the same way native users do: one seeded stream per logical task.
//!
//! Conventions:
//!
//! - Every fallible function returns a [`DpsimStatus`]; `DPSIM_STATUS_OK`
//!   is zero.
//! - Output buffers are caller-allocated; score/probability buffers must
//!   hold `len` doubles.
//! - On failure, [`dpsim_last_error_message`] returns a thread-local,
//!   NUL-terminated explanation, valid until the next failing call on the
//!   same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dpsim::error::Error;
use dpsim::mechanisms::{
    self, Bounding, MechanismConfig, MechanismKind, NoiseKind, ScoreVector, SelectionDistribution,
};
use dpsim::rng::{rng_from_seed, SimRng};

/// Opaque random-stream handle.
pub struct DpsimRng {
    inner: SimRng,
}

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsimStatus {
    Ok = 0,
    /// Malformed values (empty or non-finite scores, length mismatches).
    InvalidInput = 1,
    /// Out-of-range mechanism parameters (epsilon, delta, rate, trials).
    InvalidParameter = 2,
    /// Inconsistent configuration (e.g. clipping without public scores).
    InvalidConfig = 3,
    /// A caller contract was violated.
    ContractViolation = 4,
    /// Dataset / IO failures (unused by the mechanism surface).
    DataError = 5,
    /// A required pointer was NULL.
    NullPointer = 6,
    /// An internal panic was caught at the boundary.
    InternalError = 7,
}

/// Mechanism family selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsimMechanism {
    Rr = 0,
    Snm = 1,
}

/// Noise family selector for SNM.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsimNoise {
    Gumbel = 0,
    Exponential = 1,
    Laplace = 2,
}

/// Sensitivity-bounding selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpsimBounding {
    None = 0,
    Scaled = 1,
    Clipped = 2,
}

/// Full mechanism configuration.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DpsimMechanismConfig {
    pub mechanism: DpsimMechanism,
    pub noise: DpsimNoise,
    pub epsilon: f64,
    pub delta: f64,
    pub bounding: DpsimBounding,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DpsimStatus {
    match err {
        Error::InvalidInput(_) => DpsimStatus::InvalidInput,
        Error::InvalidParameter(_) => DpsimStatus::InvalidParameter,
        Error::InvalidConfig(_) => DpsimStatus::InvalidConfig,
        Error::ContractViolation(_) => DpsimStatus::ContractViolation,
        Error::Data(_) | Error::Io(_) => DpsimStatus::DataError,
    }
}

fn fail(err: Error) -> DpsimStatus {
    let status = status_of(&err);
    set_last_error(&err.to_string());
    status
}

fn null_pointer(name: &str) -> DpsimStatus {
    set_last_error(&format!("{name} must not be NULL"));
    DpsimStatus::NullPointer
}

/// Run `f` with panics contained at the ABI boundary.
fn guarded(f: impl FnOnce() -> DpsimStatus) -> DpsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            DpsimStatus::InternalError
        }
    }
}

fn to_config(config: &DpsimMechanismConfig) -> MechanismConfig {
    MechanismConfig {
        kind: match config.mechanism {
            DpsimMechanism::Rr => MechanismKind::Rr,
            DpsimMechanism::Snm => MechanismKind::Snm,
        },
        noise: to_noise(config.noise),
        epsilon: config.epsilon,
        delta: config.delta,
        bounding: match config.bounding {
            DpsimBounding::None => Bounding::None,
            DpsimBounding::Scaled => Bounding::Scaled,
            DpsimBounding::Clipped => Bounding::Clipped,
        },
    }
}

fn to_noise(noise: DpsimNoise) -> NoiseKind {
    match noise {
        DpsimNoise::Gumbel => NoiseKind::Gumbel,
        DpsimNoise::Exponential => NoiseKind::Exponential,
        DpsimNoise::Laplace => NoiseKind::Laplace,
    }
}

/// # Safety
/// `ptr` must point to `len` readable doubles.
unsafe fn score_vector(ptr: *const f64, len: usize) -> Result<ScoreVector, Error> {
    ScoreVector::new(std::slice::from_raw_parts(ptr, len).to_vec())
}

unsafe fn write_distribution(dist: &SelectionDistribution, out: *mut f64) {
    std::ptr::copy_nonoverlapping(dist.probabilities().as_ptr(), out, dist.len());
}

/// Explanation of the most recent failure on this thread. Valid until the
/// next failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn dpsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create a deterministic random stream from a seed. Free with
/// [`dpsim_rng_free`].
#[no_mangle]
pub extern "C" fn dpsim_rng_new(seed: u64) -> *mut DpsimRng {
    Box::into_raw(Box::new(DpsimRng {
        inner: rng_from_seed(seed),
    }))
}

/// # Safety
/// `rng` must be a pointer returned by [`dpsim_rng_new`] that has not been
/// freed, or NULL (a no-op).
#[no_mangle]
pub unsafe extern "C" fn dpsim_rng_free(rng: *mut DpsimRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Min-max scale `scores` into `[0,1]`; all zeros when every score is equal.
///
/// # Safety
/// `scores` and `out` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_scale_scores(
    scores: *const f64,
    len: usize,
    out: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        match score_vector(scores, len) {
            Ok(scores) => {
                let scaled = mechanisms::scale_scores(&scores);
                std::ptr::copy_nonoverlapping(scaled.as_slice().as_ptr(), out, len);
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Clip each private score into `[public - delta/2, public + delta/2]`.
///
/// # Safety
/// `private_scores`, `public_scores` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpsim_clip_scores(
    private_scores: *const f64,
    public_scores: *const f64,
    len: usize,
    delta: f64,
    out: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if private_scores.is_null() {
            return null_pointer("private_scores");
        }
        if public_scores.is_null() {
            return null_pointer("public_scores");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        let private = match score_vector(private_scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let public = match score_vector(public_scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        match mechanisms::clip_scores(&private, &public, delta) {
            Ok(clipped) => {
                std::ptr::copy_nonoverlapping(clipped.as_slice().as_ptr(), out, len);
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Randomized Response selection probabilities (boosted argmax, uniform
/// elsewhere).
///
/// # Safety
/// `scores` and `out_probs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpsim_rr_distribution(
    scores: *const f64,
    len: usize,
    epsilon: f64,
    out_probs: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if out_probs.is_null() {
            return null_pointer("out_probs");
        }
        let scores = match score_vector(scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        match mechanisms::rr_distribution(&scores, epsilon) {
            Ok(dist) => {
                write_distribution(&dist, out_probs);
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Exponential-mechanism selection probabilities
/// `p_i = exp(s_i eps / 2 delta) / sum_j exp(s_j eps / 2 delta)`.
///
/// # Safety
/// `scores` and `out_probs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpsim_exp_mech_distribution(
    scores: *const f64,
    len: usize,
    epsilon: f64,
    delta: f64,
    out_probs: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if out_probs.is_null() {
            return null_pointer("out_probs");
        }
        let scores = match score_vector(scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        match mechanisms::exp_mech_distribution(&scores, epsilon, delta) {
            Ok(dist) => {
                write_distribution(&dist, out_probs);
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// One Randomized Response selection.
///
/// # Safety
/// `scores` must point to `len` doubles; `rng` must be a live handle;
/// `out_index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_rr_select(
    scores: *const f64,
    len: usize,
    epsilon: f64,
    rng: *mut DpsimRng,
    out_index: *mut usize,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if rng.is_null() {
            return null_pointer("rng");
        }
        if out_index.is_null() {
            return null_pointer("out_index");
        }
        let scores = match score_vector(scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        match mechanisms::rr_select(&scores, epsilon, &mut (*rng).inner) {
            Ok(index) => {
                *out_index = index;
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// One Select Noisy Max selection on already-bounded scores: i.i.d. noise at
/// rate `epsilon / (2 delta)` is added to each score and the noisy argmax
/// index is returned.
///
/// # Safety
/// `scores` must point to `len` doubles; `rng` must be a live handle;
/// `out_index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_snm_select(
    scores: *const f64,
    len: usize,
    noise: DpsimNoise,
    epsilon: f64,
    delta: f64,
    rng: *mut DpsimRng,
    out_index: *mut usize,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if rng.is_null() {
            return null_pointer("rng");
        }
        if out_index.is_null() {
            return null_pointer("out_index");
        }
        let scores = match score_vector(scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let config = MechanismConfig::snm(to_noise(noise), epsilon, delta, Bounding::None);
        match mechanisms::snm_select(&scores, &config, &mut (*rng).inner) {
            Ok(index) => {
                *out_index = index;
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// One draw from a noise family at rate `rate` (scale `1/rate`).
///
/// # Safety
/// `rng` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_sample_noise(
    noise: DpsimNoise,
    rate: f64,
    rng: *mut DpsimRng,
    out_value: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if rng.is_null() {
            return null_pointer("rng");
        }
        if out_value.is_null() {
            return null_pointer("out_value");
        }
        match mechanisms::sample_noise(to_noise(noise), rate, &mut (*rng).inner) {
            Ok(value) => {
                *out_value = value;
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Monte Carlo estimate of a configured mechanism's selection distribution:
/// bounding is applied per `config`, the mechanism runs `trials` times, and
/// normalized frequencies are written to `out_probs`.
///
/// `public_scores` may be NULL unless `config.bounding` is clipped.
///
/// # Safety
/// `scores` (and `public_scores` when non-NULL) must point to `len` doubles;
/// `rng` must be a live handle; `out_probs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dpsim_estimate_distribution(
    config: DpsimMechanismConfig,
    scores: *const f64,
    len: usize,
    public_scores: *const f64,
    trials: u64,
    rng: *mut DpsimRng,
    out_probs: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if scores.is_null() {
            return null_pointer("scores");
        }
        if rng.is_null() {
            return null_pointer("rng");
        }
        if out_probs.is_null() {
            return null_pointer("out_probs");
        }
        let scores = match score_vector(scores, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let public = if public_scores.is_null() {
            None
        } else {
            match score_vector(public_scores, len) {
                Ok(v) => Some(v),
                Err(err) => return fail(err),
            }
        };
        match mechanisms::estimate_distribution(
            &to_config(&config),
            &scores,
            public.as_ref(),
            trials,
            &mut (*rng).inner,
        ) {
            Ok(dist) => {
                write_distribution(&dist, out_probs);
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Empirical ε-DP check: the maximum absolute log probability ratio between
/// the mechanism's selection distributions on `scores_a` and `scores_b`
/// (exact where closed forms exist, Monte Carlo with `trials` runs per side
/// otherwise). The result can be infinite when mass vanishes on exactly one
/// side of an index; compare against `epsilon` plus statistical slack.
///
/// # Safety
/// `scores_a`, `scores_b` (and `public_scores` when non-NULL) must point to
/// `len` doubles; `rng` must be a live handle; `out_ratio` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_verify_dp_ratio(
    config: DpsimMechanismConfig,
    scores_a: *const f64,
    scores_b: *const f64,
    len: usize,
    public_scores: *const f64,
    trials: u64,
    rng: *mut DpsimRng,
    out_ratio: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if scores_a.is_null() {
            return null_pointer("scores_a");
        }
        if scores_b.is_null() {
            return null_pointer("scores_b");
        }
        if rng.is_null() {
            return null_pointer("rng");
        }
        if out_ratio.is_null() {
            return null_pointer("out_ratio");
        }
        let a = match score_vector(scores_a, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let b = match score_vector(scores_b, len) {
            Ok(v) => v,
            Err(err) => return fail(err),
        };
        let public = if public_scores.is_null() {
            None
        } else {
            match score_vector(public_scores, len) {
                Ok(v) => Some(v),
                Err(err) => return fail(err),
            }
        };
        match mechanisms::verify_dp_ratio(
            &to_config(&config),
            &a,
            &b,
            public.as_ref(),
            trials,
            &mut (*rng).inner,
        ) {
            Ok(ratio) => {
                *out_ratio = ratio;
                DpsimStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Expected value `sum_i probs[i] * values[i]`.
///
/// # Safety
/// `probs` and `values` must point to `len` doubles; `out_value` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dpsim_expected_value(
    probs: *const f64,
    values: *const f64,
    len: usize,
    out_value: *mut f64,
) -> DpsimStatus {
    guarded(|| {
        if probs.is_null() {
            return null_pointer("probs");
        }
        if values.is_null() {
            return null_pointer("values");
        }
        if out_value.is_null() {
            return null_pointer("out_value");
        }
        let probs = std::slice::from_raw_parts(probs, len);
        let values = std::slice::from_raw_parts(values, len);
        if len == 0 {
            set_last_error("expected_value requires len >= 1");
            return DpsimStatus::InvalidInput;
        }
        if probs.iter().chain(values).any(|v| !v.is_finite()) {
            set_last_error("expected_value requires finite inputs");
            return DpsimStatus::InvalidInput;
        }
        *out_value = probs.iter().zip(values).map(|(p, v)| p * v).sum();
        DpsimStatus::Ok
    })
}
