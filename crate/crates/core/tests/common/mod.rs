//! Independent numerical oracles: composite Simpson quadrature of the
//! standard normal density, with no use of the library's CDF code.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Composite Simpson rule with `n` (made even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Mass, mean and variance of 𝒩(mu, 1) on `[lo, hi]`; infinite ends are
/// cut at `mu ± 14`.
pub fn truncated_moments(mu: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let a = lo.max(mu - 14.0);
    let b = hi.min(mu + 14.0);
    if a >= b {
        return (0.0, 0.5 * (lo + hi), 0.0);
    }
    let n = 20_000;
    let m0 = simpson(|x| phi(x - mu), a, b, n);
    let m1 = simpson(|x| x * phi(x - mu), a, b, n) / m0;
    let m2 = simpson(|x| (x - m1).powi(2) * phi(x - mu), a, b, n) / m0;
    (m0, m1, m2)
}

/// Unit-width grid cells `[k, k+1)` carrying non-negligible mass at `mu_star`.
pub fn grid_cells(mu_star: f64, width: f64) -> Vec<(f64, f64)> {
    let k0 = ((mu_star - 12.0) / width).floor() as i64;
    let k1 = ((mu_star + 12.0) / width).ceil() as i64;
    (k0..k1)
        .map(|k| (k as f64 * width, (k + 1) as f64 * width))
        .collect()
}

/// Coarse 1-D population loss `Σ_P 𝒩(μ*; P)·(−ln 𝒩(μ; P))` on a grid.
pub fn grid_loss(mu: f64, mu_star: f64, width: f64) -> f64 {
    grid_cells(mu_star, width)
        .into_iter()
        .map(|(lo, hi)| {
            let p_star = truncated_moments(mu_star, lo, hi).0;
            let p = truncated_moments(mu, lo, hi).0;
            if p_star > 0.0 {
                -p_star * p.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// `μ − Σ_P 𝒩(μ*; P)·E[𝒩(μ, 1) | P]` on a grid.
pub fn grid_gradient(mu: f64, mu_star: f64, width: f64) -> f64 {
    mu - grid_cells(mu_star, width)
        .into_iter()
        .map(|(lo, hi)| truncated_moments(mu_star, lo, hi).0 * truncated_moments(mu, lo, hi).1)
        .sum::<f64>()
}

/// `1 − Σ_P 𝒩(μ*; P)·Var(𝒩(μ*, 1) | P)` on a grid.
pub fn grid_curvature(mu_star: f64, width: f64) -> f64 {
    1.0 - grid_cells(mu_star, width)
        .into_iter()
        .map(|(lo, hi)| {
            let (m, _, v) = truncated_moments(mu_star, lo, hi);
            m * v
        })
        .sum::<f64>()
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j]);
    m.symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Sample covariance of row vectors.
pub fn covariance(xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n)
        .collect();
    let mut c = vec![vec![0.0; d]; d];
    for x in xs {
        for i in 0..d {
            for j in 0..d {
                c[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]);
            }
        }
    }
    c.iter()
        .map(|r| r.iter().map(|v| v / (n - 1.0)).collect())
        .collect()
}
