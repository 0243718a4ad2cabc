mod common;

use coarse::friction::{
    clip_interval, estimate_friction, friction_gradient, friction_radius, generate_friction_data,
    ols, rescale_instance, uniform_covariates, FrictionConfig, FrictionFunction, FrictionInstance,
};
use coarse::rng::SeededRng;
use coarse::Error;
use common::{dist, mean_se, median, phi, simpson};
use rand::Rng;
use statrs::distribution::{Binomial, DiscreteCDF};

fn random_w(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

#[test]
fn zero_weights_give_symmetric_preimages() {
    let mut rng = SeededRng::new(31);
    let n = 20_000;
    let x = uniform_covariates(n, 3, &mut rng);
    let g = generate_friction_data(
        &[0.0; 3],
        x,
        FrictionFunction::floor(1.0).unwrap(),
        1.0,
        &mut rng,
    )
    .unwrap();
    let positive = (0..n)
        .filter(|&i| {
            let (lo, hi) = g.instance.interval(i);
            0.5 * (lo + hi) > 0.0
        })
        .count() as u64;
    let b = Binomial::new(0.5, n as u64).unwrap();
    let p = 2.0 * b.cdf(positive.min(n as u64 - positive));
    assert!(p > 0.01, "positive {positive}, p {p}");
}

#[test]
fn floor_fraction_matches_normal_mass() {
    let oracle = simpson(phi, 0.0, 1.0, 10_000);
    assert!((oracle - 0.3413).abs() < 1e-4);
    let mut rng = SeededRng::new(32);
    let n = 100_000;
    let g = generate_friction_data(
        &[1.0],
        vec![1.0; n],
        FrictionFunction::floor(1.0).unwrap(),
        2.0,
        &mut rng,
    )
    .unwrap();
    let frac = g.instance.z().iter().filter(|&&z| z == 0.0).count() as f64 / n as f64;
    assert!((frac - oracle).abs() < 0.005, "{frac}");
}

#[test]
fn identity_data_is_ordinary_regression() {
    let mut rng = SeededRng::new(33);
    let x = uniform_covariates(100, 2, &mut rng);
    let g =
        generate_friction_data(&[0.5, -0.5], x, FrictionFunction::Identity, 1.0, &mut rng).unwrap();
    assert_eq!(g.instance.z(), g.hidden_y.as_slice());
    for i in 0..100 {
        assert_eq!(g.instance.interval(i), (g.hidden_y[i], g.hidden_y[i]));
    }
}

#[test]
fn rescaled_ols_maps_back_to_ols() {
    let mut rng = SeededRng::new(34);
    let d = 4;
    let x: Vec<f64> = uniform_covariates(5000, d, &mut rng)
        .iter()
        .map(|v| 2.5 * v)
        .collect();
    let w = random_w(d, &mut rng);
    let g = generate_friction_data(&w, x, FrictionFunction::Identity, 1.0, &mut rng).unwrap();
    let (scaled, back) = rescale_instance(&g.instance).unwrap();
    for i in 0..scaled.len() {
        assert!(scaled.x(i).iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12);
    }
    let direct = ols(g.instance.covariates(), &g.hidden_y, d).unwrap();
    let via = back.apply(&ols(scaled.covariates(), &g.hidden_y, d).unwrap());
    assert!(dist(&direct, &via) < 1e-8);
    let unit = FrictionInstance::new(
        1,
        vec![1.0, -1.0],
        vec![0.0, 1.0],
        FrictionFunction::Identity,
        1.0,
    )
    .unwrap();
    assert_eq!(rescale_instance(&unit).unwrap().1.scale, 1.0);
}

#[test]
fn gradient_examples() {
    let mut rng = SeededRng::new(35);
    let oracle = -simpson(|x| x * phi(x), 0.0, 14.0, 20_000) / simpson(phi, 0.0, 14.0, 20_000);
    let gs: Vec<f64> = (0..1_000_000)
        .map(|_| {
            friction_gradient(&[0.0], &[1.0], (0.0, f64::INFINITY), 50.0, &mut rng).unwrap()[0]
        })
        .collect();
    assert!((mean_se(&gs).0 - oracle).abs() < 0.005);
    let g = friction_gradient(&[0.5, 1.0], &[2.0, -1.0], (0.3, 0.3), 50.0, &mut rng).unwrap();
    assert_eq!(g, vec![2.0 * (0.0 - 0.3), -(0.0 - 0.3)]);
    let w = [0.3, -0.6];
    let x = [0.8, 0.4];
    let gs: Vec<Vec<f64>> = (0..100_000)
        .map(|_| {
            friction_gradient(&w, &x, (f64::NEG_INFINITY, f64::INFINITY), 1e6, &mut rng).unwrap()
        })
        .collect();
    for j in 0..2 {
        let col: Vec<f64> = gs.iter().map(|g| g[j]).collect();
        let (m, se) = mean_se(&col);
        assert!(m.abs() < 3.0 * se, "coordinate {j}: {m} (se {se})");
    }
}

#[test]
fn clipping_keeps_hidden_responses() {
    let mut rng = SeededRng::new(36);
    let n = 50_000;
    let x = uniform_covariates(n, 3, &mut rng);
    let g = generate_friction_data(
        &[0.6, 0.0, -0.6],
        x,
        FrictionFunction::floor(0.5).unwrap(),
        1.0,
        &mut rng,
    )
    .unwrap();
    let inst = &g.instance;
    let r_default = friction_radius(inst.c_bound, inst.d_bound, inst.dim(), n);
    for r in [2.5, r_default] {
        let mut violations = 0;
        for i in 0..n {
            let (lo, hi) = inst.interval(i);
            let (a, b) = clip_interval(lo, hi, r);
            let y = g.hidden_y[i];
            if y.abs() <= r {
                assert!(a <= y && y <= b, "observation {i}");
            } else {
                violations += 1;
            }
        }
        if r == r_default {
            assert_eq!(violations, 0);
        }
    }
}

#[test]
fn zero_design_is_rejected() {
    let inst = FrictionInstance::new(
        2,
        vec![0.0; 20],
        vec![0.0; 10],
        FrictionFunction::floor(1.0).unwrap(),
        1.0,
    )
    .unwrap();
    assert!(matches!(
        estimate_friction(&inst, &FrictionConfig::new(0.1, 0.5), &SeededRng::new(1)),
        Err(Error::IllConditioned { .. })
    ));
}

#[test]
fn replay_and_one_pass() {
    let mut rng = SeededRng::new(37);
    let n = 60_000;
    let x = uniform_covariates(n, 2, &mut rng);
    let g = generate_friction_data(
        &[0.4, 0.2],
        x,
        FrictionFunction::floor(1.0).unwrap(),
        1.0,
        &mut rng,
    )
    .unwrap();
    let cfg = FrictionConfig::new(0.1, 0.5);
    let a = estimate_friction(&g.instance, &cfg, &SeededRng::new(2)).unwrap();
    let b = estimate_friction(&g.instance, &cfg, &SeededRng::new(2)).unwrap();
    assert_eq!(a.order, b.order);
    assert_eq!(a.w_hat, b.w_hat);
    let mut seen = vec![false; n];
    for &i in &a.order {
        assert!(!seen[i]);
        seen[i] = true;
    }
    assert_eq!(a.order.len(), a.samples_consumed);
    assert!(a.samples_consumed <= n);
}

fn median_error(friction: &FrictionFunction, d: usize, n: usize, seeds: u64) -> f64 {
    let errs: Vec<f64> = (0..seeds)
        .map(|seed| {
            let mut rng = SeededRng::new(1000 + seed);
            let w = random_w(d, &mut rng);
            let x = uniform_covariates(n, d, &mut rng);
            let g = generate_friction_data(&w, x, friction.clone(), 1.0, &mut rng).unwrap();
            let rep = estimate_friction(&g.instance, &FrictionConfig::new(0.1, 0.5), &rng.fork(1))
                .unwrap();
            dist(&rep.w_hat, &w)
        })
        .collect();
    median(&errs)
}

/// Error ∝ n^{−1/k} with k ≈ 2, so halving ε needs ≈ 4× the data; `k`
/// comes from a least-squares fit of ln(median error) on ln n.
#[test]
fn sample_size_exponent() {
    let ns = [80_000usize, 320_000, 1_280_000];
    for friction in [
        FrictionFunction::Identity,
        FrictionFunction::floor(1.0).unwrap(),
    ] {
        let m: Vec<f64> = ns
            .iter()
            .map(|&n| median_error(&friction, 2, n, 30))
            .collect();
        let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ly: Vec<f64> = m.iter().map(|e| e.ln()).collect();
        let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
        let slope = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        let k = -1.0 / slope;
        assert!(
            (1.5..=2.6).contains(&k),
            "{friction:?}: medians {m:?}, exponent {k}"
        );
    }
}
