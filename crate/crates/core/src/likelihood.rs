//! Coarse negative log-likelihood, its stochastic gradient oracle, and
//! Monte-Carlo curvature diagnostics.
//!
//! For identity covariance, ℒ(μ) = E_P[−ln 𝒩(μ, I; P)] has
//! ∇ℒ(μ) = μ − E_P E_{𝒩(μ,I;P)}[x] and ∇²ℒ(μ) = I − E_P Cov_{𝒩(μ,I;P)}[x].

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dot, ConvexSet, HPolytope, Partition};
use crate::normal;
use crate::rng::SeededRng;
use crate::sampling::{
    sample_gaussian, sample_truncated_inner, sample_truncated_many, SamplerPolicy,
};
use crate::stream::CoarseStream;
use rand::Rng;

/// −ln(Φ(hi − mean) − Φ(lo − mean)); `+∞` for a zero-width interval.
pub fn nll_1d(mean: f64, lo: f64, hi: f64) -> Result<f64> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if lo == hi {
        return Ok(f64::INFINITY);
    }
    Ok((-normal::log_diff_cdf(lo - mean, hi - mean)).max(0.0))
}

/// One stochastic gradient of the localized likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub g: Vec<f64>,
    /// The cell missed the clipping box and was replaced by a point.
    pub cell_radius_clipped: bool,
}

/// Restricts `cell` to `B_∞(0, r)`. When the intersection is empty the cell
/// is replaced by its minimum-norm point, so the result is always usable.
pub fn localize(cell: &ConvexSet, r: f64) -> Result<(ConvexSet, bool)> {
    match cell.clip_to_box(r)? {
        Some(c) => Ok((c, false)),
        None => Ok((ConvexSet::Singleton(cell.min_norm_point()?), true)),
    }
}

/// `g = mu − y` with `y ~ 𝒩(mu, I)` restricted to the localized cell.
pub fn stochastic_gradient<R: Rng + ?Sized>(
    mu: &[f64],
    cell: &ConvexSet,
    r: f64,
    rng: &mut R,
    policy: &SamplerPolicy,
) -> Result<GradientSample> {
    check_dim(cell.dim(), mu.len())?;
    let (local, replaced) = localize(cell, r)?;
    let y = sample_truncated_inner(mu, &local, rng, policy, true)?;
    Ok(GradientSample {
        g: mu.iter().zip(&y).map(|(m, v)| m - v).collect(),
        cell_radius_clipped: replaced,
    })
}

/// Mean of ‖g‖² over `n` fresh gradients at `mu`.
pub fn second_moment_probe<R: Rng + ?Sized>(
    mu: &[f64],
    stream: &mut CoarseStream,
    r: f64,
    n: usize,
    rng: &mut R,
    policy: &SamplerPolicy,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "second moment probe needs n ≥ 1".into(),
        ));
    }
    let mut total = 0.0;
    for _ in 0..n {
        let cell = stream.next_cell()?;
        let g = stochastic_gradient(mu, &cell, r, rng, policy)?.g;
        total += dot(&g, &g);
    }
    Ok(total / n as f64)
}

/// Euclidean ball `{x : ‖x − center‖₂ ≤ radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBall {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl ProjectionBall {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn origin(dim: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) <= self.radius
    }

    /// Radial projection.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let dist = self.distance(x);
        if dist <= self.radius {
            return x.to_vec();
        }
        let s = self.radius / dist;
        x.iter()
            .zip(&self.center)
            .map(|(a, c)| c + s * (a - c))
            .collect()
    }
}

pub fn project(point: &[f64], ball: &ProjectionBall) -> Result<Vec<f64>> {
    check_dim(ball.dim(), point.len())?;
    Ok(ball.project(point))
}

const DYKSTRA_TOL: f64 = 1e-12;
const DYKSTRA_MAX_ITER: usize = 100_000;

/// Projection onto `a ∩ b` by Dykstra's alternating projections.
pub fn project_two(point: &[f64], a: &ProjectionBall, b: &ProjectionBall) -> Result<Vec<f64>> {
    check_dim(a.dim(), point.len())?;
    check_dim(b.dim(), point.len())?;
    if a.distance(&b.center) > a.radius + b.radius {
        return Err(Error::EmptySet);
    }
    let pa = a.project(point);
    if b.contains(&pa) {
        return Ok(pa);
    }
    let pb = b.project(point);
    if a.contains(&pb) {
        return Ok(pb);
    }
    let d = point.len();
    let mut x = point.to_vec();
    let mut p = vec![0.0; d];
    let mut q = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for _ in 0..DYKSTRA_MAX_ITER {
        for i in 0..d {
            buf[i] = x[i] + p[i];
        }
        let y = a.project(&buf);
        for i in 0..d {
            p[i] = buf[i] - y[i];
            buf[i] = y[i] + q[i];
        }
        let next = b.project(&buf);
        let mut change = 0.0;
        for i in 0..d {
            q[i] = buf[i] - next[i];
            change += (next[i] - x[i]) * (next[i] - x[i]);
        }
        x = next;
        if change.sqrt() <= DYKSTRA_TOL {
            break;
        }
    }
    Ok(x)
}

/// Directional curvature estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureEstimate {
    pub estimate: f64,
    pub se: f64,
}

/// Default number of truncated draws per cell in curvature estimates.
pub const HESSIAN_INNER_DRAWS: usize = 64;

/// Monte-Carlo estimate of `uᵀ∇²ℒ(μ*)u = 1 − E_P Var(uᵀx | x ∈ P)` for each
/// direction in `dirs`. The same `n` cells and `inner` draws per cell serve
/// every direction.
pub fn directional_hessian_mc_many(
    partition: &Partition,
    mu_star: &[f64],
    dirs: &[Vec<f64>],
    n: usize,
    inner: usize,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<Vec<CurvatureEstimate>> {
    check_dim(partition.dim(), mu_star.len())?;
    for u in dirs {
        check_dim(partition.dim(), u.len())?;
        if (dot(u, u).sqrt() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(
                "curvature direction must be a unit vector".into(),
            ));
        }
    }
    if n < 2 || inner < 2 {
        return Err(Error::InvalidConfig(
            "curvature estimate needs n ≥ 2 and inner ≥ 2".into(),
        ));
    }
    let cells: Vec<ConvexSet> = (0..n)
        .map(|_| partition.locate_unchecked(&sample_gaussian(mu_star, rng)))
        .collect();
    curvature_from_cells(&cells, mu_star, dirs, inner, rng, policy)
}

/// The estimate of [`directional_hessian_mc_many`] on cells already drawn
/// from `𝒩_𝒫(μ*, I)`.
pub fn curvature_from_cells(
    cells: &[ConvexSet],
    mu_star: &[f64],
    dirs: &[Vec<f64>],
    inner: usize,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<Vec<CurvatureEstimate>> {
    let n = cells.len();
    if n < 2 || inner < 2 {
        return Err(Error::InvalidConfig(
            "curvature estimate needs n ≥ 2 and inner ≥ 2".into(),
        ));
    }
    for u in dirs {
        check_dim(mu_star.len(), u.len())?;
    }
    // Clipping far outside the Gaussian bulk changes within-cell laws by
    // less than e^{-70}; it only makes unbounded polytopes samplable.
    let clip = mu_star.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 12.0;
    let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(n); dirs.len()];
    let mut proj = vec![0.0; inner];
    for cell in cells {
        check_dim(mu_star.len(), cell.dim())?;
        let cell = sampleable(cell.clone(), clip)?;
        let ys = sample_truncated_many(mu_star, &cell, inner, rng, policy)?;
        for (k, u) in dirs.iter().enumerate() {
            for (p, y) in proj.iter_mut().zip(&ys) {
                *p = dot(u, y);
            }
            let m = proj.iter().sum::<f64>() / inner as f64;
            let var = proj.iter().map(|p| (p - m) * (p - m)).sum::<f64>() / (inner - 1) as f64;
            scores[k].push(1.0 - var);
        }
    }
    Ok(scores
        .into_iter()
        .map(|s| {
            let m = s.iter().sum::<f64>() / n as f64;
            let v = s.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
            CurvatureEstimate {
                estimate: m,
                se: (v / n as f64).sqrt(),
            }
        })
        .collect())
}

fn sampleable(cell: ConvexSet, clip: f64) -> Result<ConvexSet> {
    match &cell {
        ConvexSet::HPolytope(p) if needs_clip(p) => cell.clip_to_box(clip)?.ok_or(Error::EmptySet),
        _ => Ok(cell),
    }
}

fn needs_clip(p: &HPolytope) -> bool {
    p.as_slab().is_none()
        && p.as_axis_box().is_none()
        && !ConvexSet::HPolytope(p.clone()).is_bounded()
}

/// Single-direction form of [`directional_hessian_mc_many`] with the default
/// inner draw count.
pub fn directional_hessian_mc(
    partition: &Partition,
    mu_star: &[f64],
    u: &[f64],
    n: usize,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<CurvatureEstimate> {
    let out = directional_hessian_mc_many(
        partition,
        mu_star,
        &[u.to_vec()],
        n,
        HESSIAN_INNER_DRAWS,
        rng,
        policy,
    )?;
    Ok(out[0])
}
