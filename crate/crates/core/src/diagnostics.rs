//! Sampler self-checks shared by the CLI and the test suites.

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::sampling::{hit_and_run, sample_truncated_1d, SamplerPolicy};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Two-sample chi-square homogeneity test on `bins` equal-width bins of
/// `[lo, hi]`. Bins empty in both samples are dropped.
pub fn two_sample_chi_square(
    a: &[f64],
    b: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<ChiSquare> {
    if a.is_empty() || b.is_empty() || bins < 2 || !(lo < hi && (hi - lo).is_finite()) {
        return Err(Error::InvalidConfig(
            "chi-square needs two samples, at least 2 bins and a finite range".into(),
        ));
    }
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0f64; bins];
        for &x in xs {
            let k = (((x - lo) / (hi - lo)) * bins as f64)
                .floor()
                .clamp(0.0, (bins - 1) as f64) as usize;
            h[k] += 1.0;
        }
        h
    };
    let (ha, hb) = (hist(a), hist(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut used = 0;
    for (x, y) in ha.iter().zip(&hb) {
        if x + y > 0.0 {
            stat += (ka * x - kb * y).powi(2) / (x + y);
            used += 1;
        }
    }
    let df = used.max(2) - 1;
    let p_value = ChiSquared::new(df as f64)
        .map(|c| c.sf(stat))
        .unwrap_or(f64::NAN);
    Ok(ChiSquare {
        statistic: stat,
        df,
        p_value,
    })
}

/// `n` hit-and-run states on the interval (burn-in, then every
/// `hnr_thinning`-th state) against `n` exact draws.
pub fn hit_and_run_vs_exact_1d<R: Rng + ?Sized>(
    mean: f64,
    lo: f64,
    hi: f64,
    n: usize,
    bins: usize,
    policy: &SamplerPolicy,
    rng: &mut R,
) -> Result<ChiSquare> {
    policy.validate()?;
    let set = ConvexSet::interval(lo, hi)?;
    if !set.is_bounded() {
        return Err(Error::Unbounded);
    }
    let mut x = hit_and_run(&[mean], &set, &[0.5 * (lo + hi)], policy.burn_in(1), rng)?;
    let mut chain = Vec::with_capacity(n);
    for _ in 0..n {
        x = hit_and_run(&[mean], &set, &x, policy.hnr_thinning, rng)?;
        chain.push(x[0]);
    }
    let exact: Vec<f64> = (0..n)
        .map(|_| sample_truncated_1d(mean, lo, hi, rng))
        .collect::<Result<_>>()?;
    two_sample_chi_square(&chain, &exact, lo, hi, bins)
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn identical_samples_have_zero_statistic() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let c = two_sample_chi_square(&xs, &xs, 0.0, 1.0, 20).unwrap();
        assert_eq!(c.statistic, 0.0);
        assert_eq!(c.df, 19);
        assert!((c.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_samples_are_rejected() {
        let a: Vec<f64> = (0..5000).map(|i| i as f64 / 5000.0).collect();
        let b: Vec<f64> = a.iter().map(|x| x * x).collect();
        assert!(two_sample_chi_square(&a, &b, 0.0, 1.0, 20).unwrap().p_value < 1e-6);
    }

    #[test]
    fn chain_matches_exact_sampler() {
        let mut rng = SeededRng::new(5);
        let c = hit_and_run_vs_exact_1d(
            0.0,
            0.0,
            2.0,
            20_000,
            20,
            &SamplerPolicy::default(),
            &mut rng,
        )
        .unwrap();
        assert!(c.p_value > 1e-3, "{c:?}");
    }
}
