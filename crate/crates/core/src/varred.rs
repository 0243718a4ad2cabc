//! Variance of scalar distributions before and after truncation to an
//! interval, for families beyond the Gaussian.

use crate::error::{Error, Result};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarFamily {
    Gaussian {
        mu: f64,
        sigma: f64,
    },
    Laplace {
        mu: f64,
        scale: f64,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// Density ∝ exp(−(x − mu)⁴ / s).
    Quartic {
        mu: f64,
        s: f64,
    },
}

impl fmt::Display for ScalarFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mu, sigma } => write!(f, "gaussian(mu={mu};sigma={sigma})"),
            Self::Laplace { mu, scale } => write!(f, "laplace(mu={mu};scale={scale})"),
            Self::Beta { a, b } => write!(f, "beta(a={a};b={b})"),
            Self::Quartic { mu, s } => write!(f, "quartic(mu={mu};s={s})"),
        }
    }
}

/// Variance of the Gaussian envelope used for quartic sampling, `0.8·√(s/2)`.
fn quartic_envelope_var(s: f64) -> f64 {
    0.8 * (s / 2.0).sqrt()
}

/// `ln M = s/(16σ⁴)`, the maximum over t of `−t⁴/s + t²/(2σ²)`.
fn quartic_log_bound(s: f64) -> f64 {
    let v = quartic_envelope_var(s);
    s / (16.0 * v * v)
}

/// Log of the target-over-envelope ratio at offset `t`, relative to `ln M`;
/// never positive when the envelope dominates.
pub fn quartic_log_acceptance(s: f64, t: f64) -> f64 {
    let v = quartic_envelope_var(s);
    -t.powi(4) / s + t * t / (2.0 * v) - quartic_log_bound(s)
}

impl ScalarFamily {
    /// Default members: `gaussian` (0, 1), `laplace` (0, 1), `beta` (2, 5),
    /// `quartic` (0, 1).
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::Gaussian {
                mu: 0.0,
                sigma: 1.0,
            }),
            "laplace" => Ok(Self::Laplace {
                mu: 0.0,
                scale: 1.0,
            }),
            "beta" => Ok(Self::Beta { a: 2.0, b: 5.0 }),
            "quartic" => Ok(Self::Quartic { mu: 0.0, s: 1.0 }),
            other => Err(Error::InvalidConfig(format!("unknown family '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Laplace { .. } => "laplace",
            Self::Beta { .. } => "beta",
            Self::Quartic { .. } => "quartic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Gaussian { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Self::Laplace { mu, scale } => mu.is_finite() && scale > 0.0 && scale.is_finite(),
            Self::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Self::Quartic { mu, s } => mu.is_finite() && s > 0.0 && s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "invalid parameters for {self}"
            )))
        }
    }

    /// Exact mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Self::Gaussian { mu, sigma } => (mu, sigma * sigma),
            Self::Laplace { mu, scale } => (mu, 2.0 * scale * scale),
            Self::Beta { a, b } => (a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0))),
            Self::Quartic { mu, s } => {
                let g = |x: f64| statrs::function::gamma::gamma(x);
                (mu, s.sqrt() * g(0.75) / g(0.25))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Gaussian { mu, sigma } => Normal::new(mu, sigma).expect("validated").sample(rng),
            Self::Laplace { mu, scale } => {
                let u: f64 = rng.sample::<f64, _>(Open01) - 0.5;
                mu - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            Self::Beta { a, b } => Beta::new(a, b).expect("validated").sample(rng),
            Self::Quartic { mu, s } => {
                let env = Normal::new(0.0, quartic_envelope_var(s).sqrt()).expect("validated");
                loop {
                    let t: f64 = env.sample(rng);
                    let u: f64 = rng.sample(Open01);
                    if u.ln() <= quartic_log_acceptance(s, t) {
                        return mu + t;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceRatio {
    pub r: f64,
    pub var_orig: f64,
    pub var_trunc: f64,
    /// Delta-method standard error of `r`.
    pub se: f64,
}

fn var_and_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let (mut s2, mut s4) = (0.0, 0.0);
    for x in xs {
        let c = (x - m) * (x - m);
        s2 += c;
        s4 += c * c;
    }
    let var = s2 / (n - 1.0);
    let m2 = s2 / n;
    (var, (s4 / n) / (m2 * m2))
}

const MASS_PROBE: usize = 100_000;
const MASS_MIN_HITS: usize = 50;

/// Variance of `n` raw draws against `n` draws conditioned on `[lo, hi]`
/// by rejection.
pub fn variance_ratio<R: Rng + ?Sized>(
    family: &ScalarFamily,
    lo: f64,
    hi: f64,
    n: usize,
    rng: &mut R,
) -> Result<VarianceRatio> {
    family.validate()?;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::InvalidInterval { lo, hi });
    }
    if n < 2 {
        return Err(Error::InvalidConfig("variance ratio needs n ≥ 2".into()));
    }
    let inside = |x: f64| x >= lo && x <= hi;
    let hits = (0..MASS_PROBE)
        .filter(|_| inside(family.sample(rng)))
        .count();
    if hits < MASS_MIN_HITS {
        return Err(Error::TruncationMassTooSmall {
            hits,
            probes: MASS_PROBE,
        });
    }
    let raw: Vec<f64> = (0..n).map(|_| family.sample(rng)).collect();
    let mut trunc = Vec::with_capacity(n);
    while trunc.len() < n {
        let x = family.sample(rng);
        if inside(x) {
            trunc.push(x);
        }
    }
    let (vo, ko) = var_and_kurtosis(&raw);
    let (vt, kt) = var_and_kurtosis(&trunc);
    let r = vt / vo;
    let nf = n as f64;
    let se = r * (((kt - 1.0) + (ko - 1.0)) / nf).sqrt();
    Ok(VarianceRatio {
        r,
        var_orig: vo,
        var_trunc: vt,
        se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn quartic_envelope_dominates_on_grid() {
        for s in [0.1f64, 1.0, 7.0] {
            let scale = s.powf(0.25);
            for k in -100_000..=100_000 {
                let t = k as f64 * 1e-4 * scale;
                assert!(quartic_log_acceptance(s, t) <= 1e-12, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn samplers_match_moments() {
        let mut rng = SeededRng::new(1);
        for name in ["gaussian", "laplace", "beta", "quartic"] {
            let f = ScalarFamily::by_name(name).unwrap();
            let xs: Vec<f64> = (0..400_000).map(|_| f.sample(&mut rng)).collect();
            let (m, v) = f.moments();
            let n = xs.len() as f64;
            let em = xs.iter().sum::<f64>() / n;
            let (ev, kurt) = var_and_kurtosis(&xs);
            assert!(
                (em - m).abs() < 4.0 * (v / n).sqrt(),
                "{name} mean {em} vs {m}"
            );
            let se = v * ((kurt - 1.0) / n).sqrt();
            assert!((ev - v).abs() < 4.0 * se, "{name} var {ev} vs {v}");
        }
    }

    #[test]
    fn full_line_ratio_is_one_and_tiny_mass_errors() {
        let mut rng = SeededRng::new(2);
        let g = ScalarFamily::by_name("gaussian").unwrap();
        let v = variance_ratio(&g, f64::NEG_INFINITY, f64::INFINITY, 200_000, &mut rng).unwrap();
        assert!((v.r - 1.0).abs() < 3.0 * v.se + 1e-3);
        assert!(matches!(
            variance_ratio(&g, 8.0, 9.0, 100, &mut rng),
            Err(Error::TruncationMassTooSmall { .. })
        ));
    }
}
