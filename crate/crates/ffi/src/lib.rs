//! C interface to the `coarse` library.
//!
//! Objects are opaque handles created by `*_new`-style functions and
//! released with the matching `*_free`. Every fallible function returns a
//! [`CoarseStatus`]; on failure, [`coarse_last_error_message`] describes
//! the error for the calling thread. Panics never cross the boundary.

use coarse::estimator::{estimate_mean, EstimatorConfig};
use coarse::friction::{estimate_friction, FrictionConfig, FrictionFunction, FrictionInstance};
use coarse::geometry::Partition;
use coarse::identifiability::{assess, Structural};
use coarse::rng::SeededRng;
use coarse::sampling::{sample_truncated_1d, SamplerPolicy};
use coarse::stream::CoarseStream;
use coarse::varred::{variance_ratio, ScalarFamily};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Dimension = 3,
    Runtime = 4,
    Panic = 5,
}

/// Friction mechanisms selectable across the boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseFrictionKind {
    /// `c(y) = h·⌊y/h⌋` with `h` the parameter.
    Floor = 0,
    Identity = 1,
}

/// Structural identifiability verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseVerdict {
    Identifiable = 0,
    NonIdentifiable = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoarseVarianceRatio {
    pub r: f64,
    pub var_orig: f64,
    pub var_trunc: f64,
    pub se: f64,
}

/// Opaque partition handle.
pub struct CoarsePartition(Partition);

/// Opaque estimator configuration handle.
pub struct CoarseEstimatorConfig(EstimatorConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(CoarseStatus, String);

impl From<coarse::Error> for Fail {
    fn from(e: coarse::Error) -> Self {
        use coarse::Error as E;
        let status = match e {
            E::DimensionMismatch { .. } => CoarseStatus::Dimension,
            E::InvalidInterval { .. }
            | E::InvalidSet(_)
            | E::InvalidConfig(_)
            | E::EmptySet
            | E::NoInterior
            | E::NotInRange(_)
            | E::TruncationMassTooSmall { .. }
            | E::IllConditioned { .. }
            | E::InsufficientData { .. } => CoarseStatus::InvalidArgument,
            _ => CoarseStatus::Runtime,
        };
        Fail(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(CoarseStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CoarseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CoarseStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CoarseStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail(CoarseStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if ptr.is_null() {
        return Err(Fail(CoarseStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut()
        .ok_or_else(|| Fail(CoarseStatus::NullPointer, format!("{what} is null")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Fail> {
    ptr.as_ref()
        .ok_or_else(|| Fail(CoarseStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn coarse_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn coarse_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn emit_partition(
    p: coarse::Result<Partition>,
    out_ptr: *mut *mut CoarsePartition,
) -> Result<(), Fail> {
    let slot = unsafe { out(out_ptr, "out")? };
    *slot = Box::into_raw(Box::new(CoarsePartition(p?)));
    Ok(())
}

/// Axis-aligned cubes of side `width` in `dim` dimensions.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn coarse_partition_grid(
    dim: usize,
    width: f64,
    out: *mut *mut CoarsePartition,
) -> CoarseStatus {
    guard(|| emit_partition(Partition::grid(dim, width), out))
}

/// Parallel slabs of `width` along the normal `normal[0..dim]`.
///
/// # Safety
/// `normal` must point to `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coarse_partition_slabs(
    normal: *const f64,
    dim: usize,
    width: f64,
    out: *mut *mut CoarsePartition,
) -> CoarseStatus {
    guard(|| {
        emit_partition(
            Partition::slabs(slice(normal, dim, "normal")?.to_vec(), width),
            out,
        )
    })
}

/// Intervals between `n` sorted breakpoints on the line.
///
/// # Safety
/// `points` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coarse_partition_breakpoints(
    points: *const f64,
    n: usize,
    out: *mut *mut CoarsePartition,
) -> CoarseStatus {
    guard(|| {
        emit_partition(
            Partition::breakpoints(slice(points, n, "points")?.to_vec()),
            out,
        )
    })
}

/// Dimension of a partition.
///
/// # Safety
/// `partition` must be a live handle or null; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coarse_partition_dim(
    partition: *const CoarsePartition,
    dim: *mut usize,
) -> CoarseStatus {
    guard(|| {
        *out(dim, "dim")? = handle(partition, "partition")?.0.dim();
        Ok(())
    })
}

/// Releases a partition; null is ignored.
///
/// # Safety
/// `partition` must come from a `coarse_partition_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coarse_partition_free(partition: *mut CoarsePartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Estimator configuration with the default practical schedule.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimator_config_new(
    eps: f64,
    delta: f64,
    alpha: f64,
    warm_radius: f64,
    out_ptr: *mut *mut CoarseEstimatorConfig,
) -> CoarseStatus {
    guard(|| {
        let slot = out(out_ptr, "out")?;
        let c = EstimatorConfig::new(eps, delta, alpha, warm_radius);
        c.constants.validate()?;
        *slot = Box::into_raw(Box::new(CoarseEstimatorConfig(c)));
        Ok(())
    })
}

/// Boosting runs per stage; 0 restores the default `⌈48 ln(1/δ)⌉`.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimator_config_set_boost_repeats(
    config: *mut CoarseEstimatorConfig,
    repeats: usize,
) -> CoarseStatus {
    guard(|| {
        out(config, "config")?.0.boost_repeats = (repeats > 0).then_some(repeats);
        Ok(())
    })
}

/// Fixed-budget mode with `n` observations; 0 switches back to accuracy mode.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimator_config_set_budget(
    config: *mut CoarseEstimatorConfig,
    n: usize,
) -> CoarseStatus {
    guard(|| {
        out(config, "config")?.0.budget = (n > 0).then_some(n);
        Ok(())
    })
}

/// Enables or disables the warm-start stage.
///
/// # Safety
/// `config` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimator_config_set_two_stage(
    config: *mut CoarseEstimatorConfig,
    enabled: bool,
) -> CoarseStatus {
    guard(|| {
        out(config, "config")?.0.two_stage = enabled;
        Ok(())
    })
}

/// Releases a configuration; null is ignored.
///
/// # Safety
/// `config` must come from [`coarse_estimator_config_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimator_config_free(config: *mut CoarseEstimatorConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Simulates coarse observations of 𝒩(`mu_star`, I) through `partition`
/// and estimates the mean. Writes `dim` values to `mu_hat` and the number
/// of observations used to `samples` (if non-null). Same seed, same result.
///
/// # Safety
/// Handles must be live; `mu_star` and `mu_hat` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn coarse_estimate_mean(
    partition: *const CoarsePartition,
    mu_star: *const f64,
    dim: usize,
    config: *const CoarseEstimatorConfig,
    seed: u64,
    mu_hat: *mut f64,
    samples: *mut usize,
) -> CoarseStatus {
    guard(|| {
        let p = &handle(partition, "partition")?.0;
        let cfg = &handle(config, "config")?.0;
        if dim != p.dim() {
            return Err(Fail(
                CoarseStatus::Dimension,
                format!("partition has dimension {}, got {dim}", p.dim()),
            ));
        }
        let mu = slice(mu_star, dim, "mu_star")?.to_vec();
        let dst = slice_mut(mu_hat, dim, "mu_hat")?;
        let root = SeededRng::new(seed);
        let mut stream = CoarseStream::synthetic(p.clone(), mu, root.fork(0).seed())?;
        let report = estimate_mean(&mut stream, cfg, &root.fork(1))?;
        dst.copy_from_slice(&report.mu_hat);
        if let Some(s) = samples.as_mut() {
            *s = report.samples_consumed;
        }
        Ok(())
    })
}

/// `n` draws from 𝒩(mean, 1) restricted to `[lo, hi]` (infinite ends allowed).
///
/// # Safety
/// `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn coarse_sample_truncated_1d(
    mean: f64,
    lo: f64,
    hi: f64,
    seed: u64,
    n: usize,
    out_ptr: *mut f64,
) -> CoarseStatus {
    guard(|| {
        let dst = slice_mut(out_ptr, n, "out")?;
        let mut rng = SeededRng::new(seed);
        for v in dst.iter_mut() {
            *v = sample_truncated_1d(mean, lo, hi, &mut rng)?;
        }
        Ok(())
    })
}

/// Friction regression on `n` rows of `d` covariates (row-major `x`) and
/// observed outputs `z`. Writes `d` coefficients to `w_hat`.
///
/// # Safety
/// `x` must hold `n·d` doubles, `z` `n` doubles and `w_hat` `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn coarse_friction_estimate(
    d: usize,
    n: usize,
    x: *const f64,
    z: *const f64,
    kind: CoarseFrictionKind,
    parameter: f64,
    c_bound: f64,
    eps: f64,
    alpha: f64,
    seed: u64,
    w_hat: *mut f64,
) -> CoarseStatus {
    guard(|| {
        let len = n.checked_mul(d).ok_or_else(|| invalid("n·d overflows"))?;
        let xs = slice(x, len, "x")?.to_vec();
        let zs = slice(z, n, "z")?.to_vec();
        let dst = slice_mut(w_hat, d, "w_hat")?;
        let friction = match kind {
            CoarseFrictionKind::Floor => FrictionFunction::floor(parameter)?,
            CoarseFrictionKind::Identity => FrictionFunction::Identity,
        };
        let instance = FrictionInstance::new(d, xs, zs, friction, c_bound)?;
        let report = estimate_friction(
            &instance,
            &FrictionConfig::new(eps, alpha),
            &SeededRng::new(seed),
        )?;
        dst.copy_from_slice(&report.w_hat);
        Ok(())
    })
}

/// Variance ratio of a named family (`gaussian`, `laplace`, `beta`,
/// `quartic`, default parameters) truncated to `[lo, hi]`.
///
/// # Safety
/// `family` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coarse_variance_ratio(
    family: *const c_char,
    lo: f64,
    hi: f64,
    n: usize,
    seed: u64,
    out_ptr: *mut CoarseVarianceRatio,
) -> CoarseStatus {
    guard(|| {
        if family.is_null() {
            return Err(Fail(CoarseStatus::NullPointer, "family is null".into()));
        }
        let name = CStr::from_ptr(family)
            .to_str()
            .map_err(|_| invalid("family is not UTF-8"))?;
        let slot = out(out_ptr, "out")?;
        let f = ScalarFamily::by_name(name)?;
        let v = variance_ratio(&f, lo, hi, n, &mut SeededRng::new(seed))?;
        *slot = CoarseVarianceRatio {
            r: v.r,
            var_orig: v.var_orig,
            var_trunc: v.var_trunc,
            se: v.se,
        };
        Ok(())
    })
}

/// Structural identifiability of `partition` from `n_cells` observations
/// at `mu_star`. For a non-identifiable verdict the slab direction is
/// written to `direction` (`dim` doubles, may be null).
///
/// # Safety
/// `partition` must be live; `mu_star` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn coarse_identify(
    partition: *const CoarsePartition,
    mu_star: *const f64,
    dim: usize,
    n_cells: usize,
    seed: u64,
    verdict: *mut CoarseVerdict,
    direction: *mut f64,
) -> CoarseStatus {
    guard(|| {
        let p = &handle(partition, "partition")?.0;
        let mu = slice(mu_star, dim, "mu_star")?;
        let slot = out(verdict, "verdict")?;
        let v = assess(
            p,
            mu,
            n_cells,
            &mut SeededRng::new(seed),
            &SamplerPolicy::default(),
        )?;
        *slot = match &v.structural {
            Structural::Identifiable => CoarseVerdict::Identifiable,
            Structural::Inconclusive => CoarseVerdict::Inconclusive,
            Structural::NonIdentifiable(u) => {
                if !direction.is_null() {
                    slice_mut(direction, dim, "direction")?.copy_from_slice(u);
                }
                CoarseVerdict::NonIdentifiable
            }
        };
        Ok(())
    })
}
