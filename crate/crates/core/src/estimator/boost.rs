use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoostOutcome {
    pub point: Vec<f64>,
    pub index: usize,
    /// False when no candidate had a majority within `2ε` and the
    /// median-distance fallback was used.
    pub confident: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Returns the first candidate whose `2ε`-ball holds more than half of all
/// candidates. If one in two candidates is `ε`-close to the truth, the
/// winner is `3ε`-close.
///
/// Without a qualifying candidate, returns the one minimizing the median
/// distance to the others and marks the outcome as not confident. Fewer
/// than three candidates cannot form a meaningful majority; the first is
/// returned, marked not confident when there are two.
pub fn boost_by_clustering(candidates: &[Vec<f64>], eps: f64) -> Result<BoostOutcome> {
    let Some(first) = candidates.first() else {
        return Err(Error::InvalidConfig(
            "boosting needs at least one candidate".into(),
        ));
    };
    let m = candidates.len();
    if m < 3 {
        return Ok(BoostOutcome {
            point: first.clone(),
            index: 0,
            confident: m == 1,
        });
    }
    let dists: Vec<Vec<f64>> = candidates
        .iter()
        .map(|a| candidates.iter().map(|b| dist(a, b)).collect())
        .collect();
    for (i, row) in dists.iter().enumerate() {
        let close = row.iter().filter(|&&d| d <= 2.0 * eps).count();
        if 2 * close > m {
            return Ok(BoostOutcome {
                point: candidates[i].clone(),
                index: i,
                confident: true,
            });
        }
    }
    let mut best = (0, f64::INFINITY);
    for (i, row) in dists.iter().enumerate() {
        let mut others: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, d)| *d)
            .collect();
        others.sort_by(f64::total_cmp);
        let med = others[others.len() / 2];
        if med < best.1 {
            best = (i, med);
        }
    }
    Ok(BoostOutcome {
        point: candidates[best.0].clone(),
        index: best.0,
        confident: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::Rng;

    #[test]
    fn majority_cluster_wins() {
        let mut c = vec![vec![5.0, 5.0]; 3];
        c.extend(vec![vec![0.0, 0.0]; 7]);
        let out = boost_by_clustering(&c, 0.1).unwrap();
        assert_eq!(out.point, vec![0.0, 0.0]);
        assert_eq!(out.index, 3);
        assert!(out.confident);
    }

    #[test]
    fn identical_candidates() {
        let c = vec![vec![1.5, -2.0]; 4];
        assert_eq!(
            boost_by_clustering(&c, 1e-6).unwrap().point,
            vec![1.5, -2.0]
        );
        assert!(boost_by_clustering(&[], 1.0).is_err());
    }

    #[test]
    fn noisy_candidates_land_within_three_eps() {
        let mut rng = SeededRng::new(5);
        let eps = 0.1;
        let truth = [0.4, -0.2];
        for _ in 0..100 {
            let c: Vec<Vec<f64>> = (0..10)
                .map(|_| loop {
                    let v: [f64; 2] = [rng.random_range(-eps..eps), rng.random_range(-eps..eps)];
                    if v[0].hypot(v[1]) <= eps {
                        break vec![truth[0] + v[0], truth[1] + v[1]];
                    }
                })
                .collect();
            let out = boost_by_clustering(&c, eps).unwrap();
            assert!(dist(&out.point, &truth) <= 3.0 * eps);
        }
    }

    #[test]
    fn fallback_without_majority() {
        let c = vec![vec![0.0], vec![10.0], vec![20.0], vec![30.0]];
        let out = boost_by_clustering(&c, 0.1).unwrap();
        assert!(!out.confident);
        assert!(out.index == 1 || out.index == 2);
    }
}
