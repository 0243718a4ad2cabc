//! Linear regression when responses are only seen through a friction
//! function `c`, which reveals the interval `c⁻¹(z)` containing each hidden
//! response `y = xᵀw* + ξ`.

use crate::error::{check_dim, Error, Result};
use crate::estimator::{
    boost_by_clustering, run_schedule, Bounds, PhaseRecord, ScheduleConstants, ScheduleInputs,
    StageSchedule,
};
use crate::geometry::{dot, ConvexSet};
use crate::likelihood::ProjectionBall;
use crate::rng::SeededRng;
use crate::sampling::sample_truncated_1d;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use std::time::{Duration, Instant};

/// Observation mechanism `z = c(y)` with interval preimages.
#[derive(Debug, Clone, PartialEq)]
pub enum FrictionFunction {
    /// `c(y) = h·⌊y/h⌋`.
    Floor {
        h: f64,
    },
    /// `c(y) = values[j]` on `[starts[j], starts[j+1])`, where the first
    /// start is `−∞`. Values must be distinct so preimages stay intervals.
    DeadbandLadder {
        starts: Vec<f64>,
        values: Vec<f64>,
    },
    Identity,
}

impl FrictionFunction {
    pub fn floor(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "floor step must be positive, got {h}"
            )));
        }
        Ok(Self::Floor { h })
    }

    /// Ladder from interior breakpoints `b₁ < … < b_k` and `k + 1` values.
    pub fn ladder(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut starts = vec![f64::NEG_INFINITY];
        starts.extend(breakpoints);
        Self::ladder_from_starts(starts, values)
    }

    /// Ladder from interval left ends; the first must be `−∞`.
    pub fn ladder_from_starts(starts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("ladder: {m}")));
        if starts.len() != values.len() || starts.is_empty() {
            return bad("need one value per interval");
        }
        if starts[0] != f64::NEG_INFINITY {
            return bad("first breakpoint must be -inf");
        }
        if starts[1..].iter().any(|s| !s.is_finite()) || starts.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must be finite and strictly increasing");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return bad("values must be finite");
        }
        for i in 0..values.len() {
            if values[..i].contains(&values[i]) {
                return bad("values must be distinct");
            }
        }
        Ok(Self::DeadbandLadder { starts, values })
    }

    pub fn apply(&self, y: f64) -> f64 {
        match self {
            Self::Floor { h } => h * (y / h).floor(),
            Self::DeadbandLadder { starts, values } => {
                let j = starts.partition_point(|&s| s <= y);
                values[j.saturating_sub(1)]
            }
            Self::Identity => y,
        }
    }

    /// The set `c⁻¹(z)`: an interval, or a point for the identity.
    pub fn preimage(&self, z: f64) -> Result<ConvexSet> {
        if !z.is_finite() {
            return Err(Error::NotInRange(z));
        }
        match self {
            Self::Floor { h } => {
                let k = (z / h).round();
                if (k * h - z).abs() > 1e-9 * z.abs().max(1.0) {
                    return Err(Error::NotInRange(z));
                }
                Ok(ConvexSet::Interval {
                    lo: k * h,
                    hi: (k + 1.0) * h,
                })
            }
            Self::DeadbandLadder { starts, values } => {
                let j = values
                    .iter()
                    .position(|&v| v == z)
                    .ok_or(Error::NotInRange(z))?;
                let hi = starts.get(j + 1).copied().unwrap_or(f64::INFINITY);
                Ok(ConvexSet::Interval { lo: starts[j], hi })
            }
            Self::Identity => Ok(ConvexSet::Singleton(vec![z])),
        }
    }
}

fn preimage_bounds(c: &FrictionFunction, z: f64) -> Result<(f64, f64)> {
    match c.preimage(z)? {
        ConvexSet::Interval { lo, hi } => Ok((lo, hi)),
        ConvexSet::Singleton(p) => Ok((p[0], p[0])),
        _ => unreachable!("friction preimages are intervals or points"),
    }
}

/// Covariates, observed outputs and the assumed bounds of a regression
/// problem under friction.
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionInstance {
    d: usize,
    /// Row-major `n × d` covariates.
    x: Vec<f64>,
    z: Vec<f64>,
    /// Preimage bounds per observation.
    intervals: Vec<(f64, f64)>,
    pub friction: FrictionFunction,
    /// Bound `C ≥ ‖w*‖₂`.
    pub c_bound: f64,
    /// `D = max |x_ij|`.
    pub d_bound: f64,
    /// `b = √λ_min((1/n) Σ xᵢxᵢᵀ)`; zero when the design is singular.
    pub b: f64,
    lambda_max: f64,
}

fn second_moment_eigen(x: &[f64], d: usize) -> (f64, f64) {
    let n = x.len() / d;
    let mut m = DMatrix::<f64>::zeros(d, d);
    for row in x.chunks_exact(d) {
        for i in 0..d {
            for j in 0..=i {
                m[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            m[(j, i)] = m[(i, j)];
        }
    }
    m /= n.max(1) as f64;
    let ev = SymmetricEigen::new(m).eigenvalues;
    (ev.min(), ev.max())
}

impl FrictionInstance {
    pub fn new(
        d: usize,
        x: Vec<f64>,
        z: Vec<f64>,
        friction: FrictionFunction,
        c_bound: f64,
    ) -> Result<Self> {
        if d == 0 || x.len() != z.len() * d {
            return Err(Error::DimensionMismatch {
                expected: z.len() * d,
                found: x.len(),
            });
        }
        if z.is_empty() {
            return Err(Error::InsufficientData {
                required: 1,
                available: 0,
            });
        }
        if !(c_bound > 0.0 && c_bound.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(
                "covariates must be finite and C positive".into(),
            ));
        }
        let intervals = z
            .iter()
            .map(|&v| preimage_bounds(&friction, v))
            .collect::<Result<_>>()?;
        let d_bound = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (lmin, lmax) = second_moment_eigen(&x, d);
        Ok(Self {
            d,
            x,
            z,
            intervals,
            friction,
            c_bound,
            d_bound,
            b: lmin.max(0.0).sqrt(),
            lambda_max: lmax,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn covariates(&self) -> &[f64] {
        &self.x
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Preimage of observation `i` as `(lo, hi)`; `lo == hi` for points.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        self.intervals[i]
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Errors unless `(1/n) Σ xᵢxᵢᵀ ⪰ min_b² I` with `min_b > 0`.
    pub fn check_conditioning(&self, min_b: f64) -> Result<()> {
        let lmin = self.b * self.b;
        if !(self.b > min_b.max(1e-8)) {
            return Err(Error::IllConditioned {
                min_eigenvalue: lmin,
            });
        }
        Ok(())
    }
}

/// An instance together with the hidden responses, kept only for testing.
#[derive(Debug, Clone)]
pub struct GeneratedFriction {
    pub instance: FrictionInstance,
    pub hidden_y: Vec<f64>,
}

/// Draws `ξᵢ ~ 𝒩(0, 1)` and observes `zᵢ = c(xᵢᵀw* + ξᵢ)`.
pub fn generate_friction_data<R: Rng + ?Sized>(
    w_star: &[f64],
    x: Vec<f64>,
    friction: FrictionFunction,
    c_bound: f64,
    rng: &mut R,
) -> Result<GeneratedFriction> {
    let d = w_star.len();
    if d == 0 || !x.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let hidden_y: Vec<f64> = x
        .chunks_exact(d)
        .map(|row| dot(row, w_star) + rng.sample::<f64, _>(StandardNormal))
        .collect();
    let z = hidden_y.iter().map(|&y| friction.apply(y)).collect();
    Ok(GeneratedFriction {
        instance: FrictionInstance::new(d, x, z, friction, c_bound)?,
        hidden_y,
    })
}

/// Covariates with i.i.d. uniform entries on `[−√3, √3]` (unit variance).
pub fn uniform_covariates<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Vec<f64> {
    let a = 3f64.sqrt();
    (0..n * d).map(|_| rng.random_range(-a..=a)).collect()
}

/// Maps weights of the rescaled problem back to the original scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackMap {
    /// `D√d`; scaled covariates are `x / scale`.
    pub scale: f64,
}

impl BackMap {
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|v| v / self.scale).collect()
    }

    pub fn forward(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|v| v * self.scale).collect()
    }
}

/// `x̄ᵢ = xᵢ/(D√d)`, so `‖x̄ᵢ‖₂ ≤ 1`. The scaled optimum is `w*·D√d`, and
/// the returned map divides that factor back out.
pub fn rescale_instance(instance: &FrictionInstance) -> Result<(FrictionInstance, BackMap)> {
    let scale = instance.d_bound * (instance.d as f64).sqrt();
    if !(scale > 0.0) {
        return Err(Error::IllConditioned {
            min_eigenvalue: 0.0,
        });
    }
    let mut out = instance.clone();
    out.x.iter_mut().for_each(|v| *v /= scale);
    out.c_bound = instance.c_bound * scale;
    out.d_bound = instance.d_bound / scale;
    out.b = instance.b / scale;
    out.lambda_max = instance.lambda_max / (scale * scale);
    Ok((out, BackMap { scale }))
}

/// `S ∩ [−R, R]`, or the endpoint of `S` nearest zero when that is empty.
pub fn clip_interval(lo: f64, hi: f64, r: f64) -> (f64, f64) {
    if lo > r {
        (lo, lo)
    } else if hi < -r {
        (hi, hi)
    } else {
        (lo.max(-r), hi.min(r))
    }
}

/// `(xᵀw − u)·x` with `u ~ 𝒩(xᵀw, 1)` restricted to the clipped preimage.
pub fn friction_gradient<R: Rng + ?Sized>(
    w: &[f64],
    x: &[f64],
    interval: (f64, f64),
    r: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(w.len(), x.len())?;
    let (lo, hi) = clip_interval(interval.0, interval.1, r);
    let m = dot(x, w);
    let u = sample_truncated_1d(m, lo, hi, rng)?;
    Ok(x.iter().map(|xi| (m - u) * xi).collect())
}

/// Knobs for [`estimate_friction`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrictionConfig {
    pub eps: f64,
    pub alpha: f64,
    pub constants: ScheduleConstants,
    /// Give the last stage every observation the schedule leaves unused.
    pub use_remainder: bool,
    /// Optional boosting over disjoint data splits; 1 disables it.
    pub boost_splits: usize,
    /// Minimum acceptable `b`.
    pub min_b: f64,
}

impl FrictionConfig {
    pub fn new(eps: f64, alpha: f64) -> Self {
        Self {
            eps,
            alpha,
            constants: ScheduleConstants {
                safety: 1.0 / 128.0,
                ..ScheduleConstants::practical()
            },
            use_remainder: true,
            boost_splits: 1,
            min_b: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.boost_splits == 0 {
            return Err(Error::InvalidConfig("boost splits must be positive".into()));
        }
        self.constants.validate()
    }
}

/// `R = C·D·√d + 2 ln n + 5`.
pub fn friction_radius(c_bound: f64, d_bound: f64, d: usize, n: usize) -> f64 {
    c_bound * d_bound * (d as f64).sqrt() + 2.0 * (n.max(1) as f64).ln() + 5.0
}

/// Schedule for an already rescaled instance and `n` usable observations.
pub fn friction_schedule(
    scaled: &FrictionInstance,
    config: &FrictionConfig,
    eps_scaled: f64,
    r: f64,
    n: usize,
) -> Result<StageSchedule> {
    let c = &config.constants;
    let cb = scaled.c_bound;
    let mean_sq = scaled.x.iter().map(|v| v * v).sum::<f64>() / scaled.len() as f64;
    let (g2, eps0) = match c.bounds {
        Bounds::Worst => {
            let g2 = 4.0 * (r * r + cb * cb + 1.0);
            (g2, cb * g2.sqrt())
        }
        Bounds::Smooth => (
            mean_sq * (1.0 + scaled.lambda_max * cb * cb),
            0.5 * scaled.lambda_max * cb * cb,
        ),
    };
    let kappa = config.alpha * scaled.b;
    let inputs = ScheduleInputs {
        eps0,
        g2,
        eta: c.eta_factor * kappa,
        rho: c.rho_factor * kappa * kappa,
        safety: c.safety,
        max_step: c.max_step / scaled.lambda_max,
    };
    let eps_f = inputs
        .rho
        .min(inputs.eta * inputs.eta * eps_scaled * eps_scaled);
    let s = StageSchedule::for_gap(inputs, eps_f)?;
    if s.total() > n {
        return Err(Error::InsufficientData {
            required: s.total(),
            available: n,
        });
    }
    Ok(if config.use_remainder {
        s.absorb_remainder(n)
    } else {
        s
    })
}

/// Output of one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct OnePassOutcome {
    /// Final average in the scale of the instance passed in.
    pub w: Vec<f64>,
    pub phases: Vec<PhaseRecord>,
    /// Observation indices in the order their gradients were used.
    pub order: Vec<usize>,
}

/// Alg.-1 style staged PSGD over one random permutation of `indices`:
/// stage `ℓ` step `t` uses position `(ℓ − 1)·T + t`, so every observation
/// contributes at most one gradient.
pub fn one_pass_psgd(
    scaled: &FrictionInstance,
    indices: &[usize],
    schedule: &StageSchedule,
    r: f64,
    rng: &mut SeededRng,
) -> Result<OnePassOutcome> {
    if schedule.total() > indices.len() {
        return Err(Error::InsufficientData {
            required: schedule.total(),
            available: indices.len(),
        });
    }
    let mut perm = indices.to_vec();
    perm.shuffle(rng);
    let d = scaled.d;
    let ball = ProjectionBall::origin(d, scaled.c_bound)?;
    let mut used = vec![false; scaled.len()];
    let mut order = Vec::with_capacity(schedule.total());
    let mut pos = 0;
    let (w, phases) = run_schedule(schedule, &ball, &vec![0.0; d], |w| {
        let j = perm[pos];
        pos += 1;
        assert!(!used[j], "observation {j} used twice");
        used[j] = true;
        order.push(j);
        Ok((
            friction_gradient(w, scaled.x(j), scaled.intervals[j], r, rng)?,
            false,
        ))
    })?;
    Ok(OnePassOutcome { w, phases, order })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrictionReport {
    /// Estimate in the original scale.
    pub w_hat: Vec<f64>,
    pub samples_consumed: usize,
    pub r: f64,
    pub b: f64,
    pub schedule: StageSchedule,
    pub phases: Vec<PhaseRecord>,
    pub candidates: Vec<Vec<f64>>,
    pub order: Vec<usize>,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

/// Full pipeline: conditioning check, rescaling, localization radius,
/// one-pass PSGD and back-mapping.
pub fn estimate_friction(
    instance: &FrictionInstance,
    config: &FrictionConfig,
    rng: &SeededRng,
) -> Result<FrictionReport> {
    let start = Instant::now();
    config.validate()?;
    instance.check_conditioning(config.min_b)?;
    let (scaled, back) = rescale_instance(instance)?;
    let n = instance.len();
    let d = instance.d;
    let r = friction_radius(instance.c_bound, instance.d_bound, d, n);
    let splits = config.boost_splits;
    let per = n / splits;
    let eps_scaled = config.eps * back.scale;
    let schedule = friction_schedule(&scaled, config, eps_scaled, r, per)?;
    let mut warnings = Vec::new();
    let need = 100.0 * (schedule.tau as f64).powi(2) * schedule.steps as f64;
    if (per as f64) < need {
        warnings.push(format!(
            "n = {per} is below 100·τ²·T = {need:.3e}; the one-pass guarantee is not covered by the analysis"
        ));
    }
    let mut outcomes = Vec::with_capacity(splits);
    for k in 0..splits {
        let idx: Vec<usize> = (k * per..(k + 1) * per).collect();
        let mut run_rng = rng.fork(k as u64);
        outcomes.push(one_pass_psgd(&scaled, &idx, &schedule, r, &mut run_rng)?);
    }
    let candidates: Vec<Vec<f64>> = outcomes.iter().map(|o| back.apply(&o.w)).collect();
    let chosen = if splits >= 3 {
        let b = boost_by_clustering(&candidates, config.eps)?;
        if !b.confident {
            warnings.push(
                "no split had a majority within 2ε; used the median-distance fallback".into(),
            );
        }
        b.index
    } else {
        0
    };
    let chosen_run = outcomes.swap_remove(chosen);
    let samples_consumed = schedule.total() * splits;
    Ok(FrictionReport {
        w_hat: candidates[chosen].clone(),
        samples_consumed,
        r,
        b: instance.b,
        schedule,
        phases: chosen_run.phases,
        candidates,
        order: chosen_run.order,
        wall_time: start.elapsed(),
        warnings,
    })
}

/// Closed-form least squares `(XᵀX)⁻¹Xᵀy`.
pub fn ols(x: &[f64], y: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 || x.len() != y.len() * d {
        return Err(Error::DimensionMismatch {
            expected: y.len() * d,
            found: x.len(),
        });
    }
    let xm = DMatrix::from_row_slice(y.len(), d, x);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let xty = xm.transpose() * yv;
    let chol = xtx.cholesky().ok_or(Error::IllConditioned {
        min_eigenvalue: 0.0,
    })?;
    Ok(chol.solve(&xty).iter().copied().collect())
}
