mod common;

use coarse::rng::SeededRng;
use coarse::varred::{variance_ratio, ScalarFamily};
use coarse::Error;
use common::{simpson, truncated_moments};
use rand::Rng;

/// Variance of the density ∝ `f` on `[lo, hi]`.
fn quad_variance(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 40_000;
    let m0 = simpson(&f, lo, hi, n);
    let m1 = simpson(|x| x * f(x), lo, hi, n) / m0;
    simpson(|x| (x - m1).powi(2) * f(x), lo, hi, n) / m0
}

#[test]
fn gaussian_half_line_ratio() {
    let oracle = truncated_moments(0.0, 0.0, f64::INFINITY).2;
    assert!((oracle - (1.0 - 2.0 / std::f64::consts::PI)).abs() < 1e-9);
    let mut rng = SeededRng::new(51);
    let fam = ScalarFamily::Gaussian {
        mu: 0.0,
        sigma: 1.0,
    };
    let v = variance_ratio(&fam, 0.0, f64::INFINITY, 1_000_000, &mut rng).unwrap();
    assert!((v.r - 0.3634).abs() < 0.01, "{v:?}");
    assert!((v.r - oracle).abs() < 3.0 * v.se, "{v:?}");
    let full = variance_ratio(&fam, f64::NEG_INFINITY, f64::INFINITY, 200_000, &mut rng).unwrap();
    assert!((full.r - 1.0).abs() < 3.0 * full.se + 0.01, "{full:?}");
}

#[test]
fn laplace_beta_quartic_match_quadrature() {
    let mut rng = SeededRng::new(52);
    let cases: Vec<(ScalarFamily, f64, f64, f64)> = vec![
        (
            ScalarFamily::Laplace {
                mu: 0.0,
                scale: 1.0,
            },
            -1.0,
            1.0,
            quad_variance(|x: f64| (-x.abs()).exp(), -1.0, 1.0)
                / quad_variance(|x: f64| (-x.abs()).exp(), -40.0, 40.0),
        ),
        (
            ScalarFamily::Beta { a: 2.0, b: 5.0 },
            2.0 / 7.0,
            1.0,
            quad_variance(|x: f64| x * (1.0 - x).powi(4), 2.0 / 7.0, 1.0)
                / quad_variance(|x: f64| x * (1.0 - x).powi(4), 0.0, 1.0),
        ),
        (
            ScalarFamily::Quartic { mu: 0.0, s: 1.0 },
            0.0,
            f64::INFINITY,
            quad_variance(|x: f64| (-x.powi(4)).exp(), 0.0, 8.0)
                / quad_variance(|x: f64| (-x.powi(4)).exp(), -8.0, 8.0),
        ),
    ];
    for (fam, lo, hi, oracle) in cases {
        let v = variance_ratio(&fam, lo, hi, 400_000, &mut rng).unwrap();
        assert!(
            (v.r - oracle).abs() < 3.0 * v.se,
            "{fam}: {v:?} vs {oracle}"
        );
        assert!(v.r < 1.0);
    }
}

#[test]
fn moments_match_quadrature() {
    let q = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| quad_variance(f, lo, hi);
    let cases: Vec<(ScalarFamily, f64)> = vec![
        (
            ScalarFamily::Laplace {
                mu: 1.0,
                scale: 0.5,
            },
            q(&|x| (-(x - 1.0).abs() / 0.5).exp(), -30.0, 32.0),
        ),
        (
            ScalarFamily::Beta { a: 3.0, b: 1.5 },
            q(&|x| x * x * (1.0 - x).sqrt(), 0.0, 1.0),
        ),
        (
            ScalarFamily::Quartic { mu: -1.0, s: 7.0 },
            q(&|x| (-(x + 1.0).powi(4) / 7.0).exp(), -15.0, 13.0),
        ),
    ];
    for (fam, var) in cases {
        let (_, v) = fam.moments();
        assert!((v - var).abs() < 1e-6 * var, "{fam}: {v} vs {var}");
    }
}

fn random_family(kind: &str, rng: &mut SeededRng) -> ScalarFamily {
    match kind {
        "gaussian" => ScalarFamily::Gaussian {
            mu: rng.random_range(-2.0..2.0),
            sigma: rng.random_range(0.2..3.0),
        },
        "laplace" => ScalarFamily::Laplace {
            mu: rng.random_range(-2.0..2.0),
            scale: rng.random_range(0.2..3.0),
        },
        "beta" => ScalarFamily::Beta {
            a: rng.random_range(1.0..6.0),
            b: rng.random_range(1.0..6.0),
        },
        _ => ScalarFamily::Quartic {
            mu: rng.random_range(-2.0..2.0),
            s: rng.random_range(0.1..5.0),
        },
    }
}

/// Log-concave laws lose variance under any interval truncation.
#[test]
fn random_truncations_reduce_variance() {
    let mut rng = SeededRng::new(53);
    for kind in ["gaussian", "laplace", "beta", "quartic"] {
        for _ in 0..20 {
            let fam = random_family(kind, &mut rng);
            let (m, v) = fam.moments();
            let sd = v.sqrt();
            let lo = m + sd * rng.random_range(-2.0..1.0);
            let hi = if rng.random_bool(0.3) {
                f64::INFINITY
            } else {
                lo + sd * rng.random_range(0.3..3.0)
            };
            let r = match variance_ratio(&fam, lo, hi, 50_000, &mut rng) {
                Ok(r) => r,
                Err(Error::TruncationMassTooSmall { .. }) => continue,
                Err(e) => panic!("{fam}: {e}"),
            };
            assert!(r.r < 1.0 + 3.0 * r.se, "{fam} on [{lo}, {hi}]: {r:?}");
        }
    }
}

#[test]
fn tiny_mass_and_bad_intervals_error() {
    let mut rng = SeededRng::new(54);
    let fam = ScalarFamily::Gaussian {
        mu: 0.0,
        sigma: 1.0,
    };
    assert!(matches!(
        variance_ratio(&fam, 8.0, 9.0, 1000, &mut rng),
        Err(Error::TruncationMassTooSmall { .. })
    ));
    assert!(variance_ratio(&fam, 1.0, 0.0, 1000, &mut rng).is_err());
    assert!(variance_ratio(
        &ScalarFamily::Beta { a: -1.0, b: 2.0 },
        0.0,
        1.0,
        1000,
        &mut rng
    )
    .is_err());
}
