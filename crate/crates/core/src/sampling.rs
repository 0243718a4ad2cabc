//! Draws from identity-covariance Gaussians, optionally conditioned on a
//! convex cell.
//!
//! Intervals and axis boxes are sampled exactly with a tail-stable inverse
//! CDF (coordinates factorize under identity covariance). Slab-shaped
//! polytopes reduce to one exact 1-D draw along the slab normal. Remaining
//! polytopes use rejection when a probe says the cell carries enough mass,
//! otherwise a hit-and-run chain started at the Chebyshev center.

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dot, ConvexSet, HPolytope};
use crate::normal;
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

/// Knobs for the polytope samplers.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerPolicy {
    /// Use rejection when the probe acceptance rate is at least this.
    pub rejection_min_acceptance: f64,
    /// Hit-and-run burn-in; `None` means `500 · dim`.
    pub hnr_burn_in: Option<usize>,
    /// Steps between retained states when drawing several samples from one chain.
    pub hnr_thinning: usize,
    /// Number of Gaussian draws used to estimate the rejection acceptance rate.
    pub acceptance_probe: usize,
}

impl Default for SamplerPolicy {
    fn default() -> Self {
        Self {
            rejection_min_acceptance: 0.05,
            hnr_burn_in: None,
            hnr_thinning: 10,
            acceptance_probe: 200,
        }
    }
}

impl SamplerPolicy {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rejection_min_acceptance > 0.0
            && self.rejection_min_acceptance <= 1.0
            && self.hnr_burn_in.is_none_or(|b| b > 0)
            && self.hnr_thinning > 0
            && self.acceptance_probe > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid sampler policy {self:?}"
            )))
        }
    }

    pub fn burn_in(&self, dim: usize) -> usize {
        self.hnr_burn_in.unwrap_or(500 * dim)
    }
}

/// One draw from 𝒩(mean, I).
pub fn sample_gaussian<R: Rng + ?Sized>(mean: &[f64], rng: &mut R) -> Vec<f64> {
    mean.iter()
        .map(|m| m + rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Standard normal conditioned on `[a, b]`, by inversion of the conditional
/// CDF at `u`.
fn standard_truncated(a: f64, b: f64, u: f64) -> f64 {
    if b <= 0.0 {
        return -standard_truncated(-b, -a, 1.0 - u);
    }
    let x = if a >= 0.0 {
        // upper tail: invert Q(x) = Q(a) − u (Q(a) − Q(b))
        if a <= normal::TAIL_LOG_SPACE {
            let (qa, qb) = (normal::sf(a), normal::sf(b));
            let q = qa - u * (qa - qb);
            if q > 0.0 {
                -normal::ppf(q)
            } else {
                b
            }
        } else {
            let (la, lb) = (normal::log_sf(a), normal::log_sf(b));
            let w = -(lb - la).exp_m1();
            let target = la + (-u * w).ln_1p();
            -normal::inverse_log_cdf(target)
        }
    } else {
        let (pa, pb) = (normal::cdf(a), normal::cdf(b));
        normal::ppf(pa + u * (pb - pa))
    };
    x.clamp(a, b)
}

/// Exact draw from 𝒩(mean, 1) conditioned on `[lo, hi]`.
///
/// A zero-length interval returns its point.
pub fn sample_truncated_1d<R: Rng + ?Sized>(
    mean: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if lo == hi {
        return Ok(lo);
    }
    let u: f64 = rng.sample(Open01);
    Ok((mean + standard_truncated(lo - mean, hi - mean, u)).clamp(lo, hi))
}

fn sample_box<R: Rng + ?Sized>(
    mean: &[f64],
    lo: &[f64],
    hi: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    mean.iter()
        .zip(lo.iter().zip(hi))
        .map(|(m, (l, h))| sample_truncated_1d(*m, *l, *h, rng))
        .collect()
}

/// Exact draw on `{lo ≤ uᵀx ≤ hi}`: truncated along `u`, free orthogonally.
fn sample_slab<R: Rng + ?Sized>(
    mean: &[f64],
    u: &[f64],
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if lo > hi {
        return Err(Error::EmptySet);
    }
    let mu_u = dot(u, mean);
    let t = sample_truncated_1d(mu_u, lo, hi, rng)?;
    let z: Vec<f64> = mean
        .iter()
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let zu = dot(&z, u);
    Ok(mean
        .iter()
        .zip(z.iter().zip(u))
        .map(|(m, (zi, ui))| m + zi - zu * ui + (t - mu_u) * ui)
        .collect())
}

enum PolytopeRoute {
    Exact(Vec<f64>),
    Chain { start: Vec<f64> },
}

fn polytope_route<R: Rng + ?Sized>(
    mean: &[f64],
    p: &HPolytope,
    rng: &mut R,
    policy: &SamplerPolicy,
    known_bounded: bool,
) -> Result<PolytopeRoute> {
    if let Some((u, lo, hi)) = p.as_slab() {
        return sample_slab(mean, &u, lo, hi, rng).map(PolytopeRoute::Exact);
    }
    if let Some((lo, hi)) = p.as_axis_box() {
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::EmptySet);
        }
        return sample_box(mean, &lo, &hi, rng).map(PolytopeRoute::Exact);
    }
    let set = ConvexSet::HPolytope(p.clone());
    if !known_bounded && !set.is_bounded() {
        return Err(Error::Unbounded);
    }
    let mut first = None;
    let mut hits = 0usize;
    for _ in 0..policy.acceptance_probe {
        let x = sample_gaussian(mean, rng);
        if set.contains(&x)? {
            hits += 1;
            if first.is_none() {
                first = Some(x);
            }
        }
    }
    let rate = hits as f64 / policy.acceptance_probe as f64;
    if rate >= policy.rejection_min_acceptance {
        if let Some(x) = first {
            return Ok(PolytopeRoute::Exact(x));
        }
    }
    let (start, _) = p.chebyshev_center()?;
    Ok(PolytopeRoute::Chain { start })
}

/// One draw from 𝒩(mean, I) restricted to `set`.
///
/// Unbounded polytopes other than slabs are rejected; clip them first.
pub fn sample_truncated<R: Rng + ?Sized>(
    mean: &[f64],
    set: &ConvexSet,
    rng: &mut R,
    policy: &SamplerPolicy,
) -> Result<Vec<f64>> {
    sample_truncated_inner(mean, set, rng, policy, false)
}

pub(crate) fn sample_truncated_inner<R: Rng + ?Sized>(
    mean: &[f64],
    set: &ConvexSet,
    rng: &mut R,
    policy: &SamplerPolicy,
    known_bounded: bool,
) -> Result<Vec<f64>> {
    check_dim(set.dim(), mean.len())?;
    match set {
        ConvexSet::Singleton(x) => Ok(x.clone()),
        ConvexSet::WholeSpace(_) => Ok(sample_gaussian(mean, rng)),
        ConvexSet::Interval { lo, hi } => Ok(vec![sample_truncated_1d(mean[0], *lo, *hi, rng)?]),
        ConvexSet::AxisBox { lo, hi } => sample_box(mean, lo, hi, rng),
        ConvexSet::HPolytope(p) => match polytope_route(mean, p, rng, policy, known_bounded)? {
            PolytopeRoute::Exact(x) => Ok(x),
            PolytopeRoute::Chain { start } => {
                hit_and_run_unchecked(mean, set, start, policy.burn_in(mean.len()), rng)
            }
        },
    }
}

/// `n` draws from 𝒩(mean, I) restricted to `set`. Polytopes that need MCMC
/// share one chain: burn-in, then every `hnr_thinning`-th state.
pub fn sample_truncated_many<R: Rng + ?Sized>(
    mean: &[f64],
    set: &ConvexSet,
    n: usize,
    rng: &mut R,
    policy: &SamplerPolicy,
) -> Result<Vec<Vec<f64>>> {
    check_dim(set.dim(), mean.len())?;
    let ConvexSet::HPolytope(p) = set else {
        return (0..n)
            .map(|_| sample_truncated(mean, set, rng, policy))
            .collect();
    };
    if n == 0 {
        return Ok(Vec::new());
    }
    match polytope_route(mean, p, rng, policy, false)? {
        PolytopeRoute::Exact(first) => {
            let mut out = vec![first];
            let slab = p.as_slab().is_some() || p.as_axis_box().is_some();
            while out.len() < n {
                if slab {
                    out.push(sample_truncated(mean, set, rng, policy)?);
                } else {
                    let x = sample_gaussian(mean, rng);
                    if set.contains(&x)? {
                        out.push(x);
                    }
                }
            }
            Ok(out)
        }
        PolytopeRoute::Chain { start } => {
            let mut x = hit_and_run_unchecked(mean, set, start, policy.burn_in(mean.len()), rng)?;
            let mut out = Vec::with_capacity(n);
            out.push(x.clone());
            while out.len() < n {
                x = hit_and_run_unchecked(mean, set, x, policy.hnr_thinning, rng)?;
                out.push(x.clone());
            }
            Ok(out)
        }
    }
}

/// Chord `{x + t·dir : t ∈ [lo, hi]}` of `set` through `x`, by ratio tests
/// against the set's bounds. `x` must lie in the set.
pub fn chord(set: &ConvexSet, x: &[f64], dir: &[f64]) -> Result<(f64, f64)> {
    check_dim(set.dim(), x.len())?;
    check_dim(set.dim(), dir.len())?;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut bound = |slack: f64, rate: f64| {
        // constraint: rate · t ≤ slack
        if rate > 0.0 {
            hi = hi.min(slack / rate);
        } else if rate < 0.0 {
            lo = lo.max(slack / rate);
        }
    };
    match set {
        ConvexSet::Interval { lo: l, hi: h } => {
            bound(h - x[0], dir[0]);
            bound(x[0] - l, -dir[0]);
        }
        ConvexSet::AxisBox { lo: l, hi: h } => {
            for i in 0..x.len() {
                bound(h[i] - x[i], dir[i]);
                bound(x[i] - l[i], -dir[i]);
            }
        }
        ConvexSet::HPolytope(p) => {
            for (a, b) in p.rows() {
                bound(b - dot(a, x), dot(a, dir));
            }
        }
        ConvexSet::Singleton(_) => return Ok((0.0, 0.0)),
        ConvexSet::WholeSpace(_) => {}
    }
    Ok((lo.min(0.0), hi.max(0.0)))
}

/// Chord endpoints found only through membership queries: doubling out to
/// `max_extent`, then bisection to `1e-10` of the chord length.
pub fn chord_by_membership(
    set: &ConvexSet,
    x: &[f64],
    dir: &[f64],
    max_extent: f64,
) -> Result<(f64, f64)> {
    let inside = |t: f64| -> Result<bool> {
        let p: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
        set.contains(&p)
    };
    let mut ends = [0.0; 2];
    for (k, sign) in [-1.0, 1.0].into_iter().enumerate() {
        let mut good = 0.0;
        let mut step = 1e-3;
        let mut bad = None;
        while step <= max_extent {
            if inside(sign * step)? {
                good = step;
                step *= 2.0;
            } else {
                bad = Some(step);
                break;
            }
        }
        let Some(mut bad) = bad else {
            ends[k] = sign * f64::INFINITY;
            continue;
        };
        let scale = bad.max(1e-300);
        while bad - good > 1e-10 * scale {
            let mid = 0.5 * (good + bad);
            if inside(sign * mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        ends[k] = sign * good;
    }
    Ok((ends[0], ends[1]))
}

fn random_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Hit-and-run chain for the density ∝ exp(−½‖x − mean‖²) on `set`,
/// started at `start` and run for `steps` moves; returns the final state.
pub fn hit_and_run<R: Rng + ?Sized>(
    mean: &[f64],
    set: &ConvexSet,
    start: &[f64],
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_dim(set.dim(), mean.len())?;
    if !set.contains(start)? {
        return Err(Error::InvalidConfig(
            "hit-and-run start lies outside the set".into(),
        ));
    }
    hit_and_run_unchecked(mean, set, start.to_vec(), steps, rng)
}

fn hit_and_run_unchecked<R: Rng + ?Sized>(
    mean: &[f64],
    set: &ConvexSet,
    mut x: Vec<f64>,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = x.len();
    let mut offset = vec![0.0; d];
    for _ in 0..steps {
        let v = random_direction(d, rng);
        let (lo, hi) = chord(set, &x, &v)?;
        for i in 0..d {
            offset[i] = mean[i] - x[i];
        }
        let t = sample_truncated_1d(dot(&v, &offset), lo, hi, rng)?;
        for i in 0..d {
            x[i] += t * v[i];
        }
    }
    Ok(x)
}
