//! Standard normal density, distribution and quantile functions that stay
//! accurate deep in the tails.
//!
//! Everything here works on the standard normal; callers shift by the mean.

#![allow(clippy::excessive_precision, clippy::inconsistent_digit_grouping)]

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this argument `erfc` loses relative precision, so `log_cdf` switches
/// to the asymptotic series.
const ASYMPTOTIC_CUTOFF: f64 = -35.0;

/// Threshold beyond which tail sampling works in log space.
pub const TAIL_LOG_SPACE: f64 = 8.0;

#[inline]
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

#[inline]
pub fn log_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// Φ(x).
#[inline]
pub fn cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x), computed without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    cdf(-x)
}

/// ln Φ(x).
pub fn log_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x > 0.0 {
        (-sf(x)).ln_1p()
    } else if x > ASYMPTOTIC_CUTOFF {
        cdf(x).ln()
    } else {
        // Mills-ratio series: Φ(x) = φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶ + 105/x⁸ − …)
        let z = 1.0 / (x * x);
        let series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * (105.0 - z * 945.0))));
        log_pdf(x) - (-x).ln() + series.ln()
    }
}

/// ln(1 − Φ(x)).
#[inline]
pub fn log_sf(x: f64) -> f64 {
    log_cdf(-x)
}

/// ln(1 − eᵃ) for a ≤ 0.
#[inline]
fn log1m_exp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// ln(Φ(b) − Φ(a)) for a ≤ b. Returns −∞ when a == b.
pub fn log_diff_cdf(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a == b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        // both in the upper tail: Q(a) − Q(b)
        let la = log_sf(a);
        let lb = log_sf(b);
        la + log1m_exp(lb - la)
    } else if b <= 0.0 {
        let la = log_cdf(a);
        let lb = log_cdf(b);
        lb + log1m_exp(la - lb)
    } else {
        (-(cdf(a) + sf(b))).ln_1p()
    }
}

/// Φ⁻¹(p) for p ∈ (0, 1), Wichura's AS 241 (PPND16), relative error ~1e-16.
pub fn ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_700)
                * r
                + 45921.953_931_549_871)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545_4 * r + 28729.085_735_721_943) * r
                + 39307.895_800_092_710)
                * r
                + 21213.794_301_586_595)
                * r
                + 5394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414_1e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
                + 1.519_866_656_361_645_7e-2)
                * r
                + 0.148_103_976_427_480_07)
                * r
                + 0.689_767_334_985_100_00)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_3e-2)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446_0e-7) * r
                + 1.846_318_317_510_054_7e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 1.487_536_129_085_061_5e-2)
                * r
                + 0.136_929_880_922_735_81)
                * r
                + 0.599_832_206_555_887_94)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Solves ln Φ(x) = `log_p` for x. Accurate even when Φ(x) underflows.
pub fn inverse_log_cdf(log_p: f64) -> f64 {
    if log_p >= 0.0 {
        return f64::INFINITY;
    }
    if log_p == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if log_p > -std::f64::consts::LN_2 {
        // upper half: go through the complementary probability
        let q = -log_p.exp_m1();
        return -ppf(q);
    }
    if log_p > -700.0 {
        return ppf(log_p.exp());
    }
    // Newton on ln Φ from the leading asymptotic guess.
    let t = -2.0 * log_p;
    let mut x = -(t - (2.0 * PI * t).ln()).sqrt();
    for _ in 0..50 {
        let f = log_cdf(x) - log_p;
        let slope = (log_pdf(x) - log_cdf(x)).exp();
        let step = f / slope;
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    x
}
