//! Coarse Gaussian mean estimation by staged projected SGD on the coarse
//! negative log-likelihood, boosted by clustering independent runs.

mod boost;
mod schedule;

pub use boost::{boost_by_clustering, BoostOutcome};
pub use schedule::{schedule_size, Bounds, ScheduleConstants, ScheduleInputs, StageSchedule};

use crate::error::{check_dim, Error, Result};
use crate::likelihood::{project_two, stochastic_gradient, ProjectionBall};
use crate::rng::SeededRng;
use crate::sampling::SamplerPolicy;
use crate::stream::CoarseStream;
use rayon::prelude::*;
use std::time::{Duration, Instant};

/// Accuracy targeted by the warm-start stage; its boosted output is within
/// `3 · WARM_EPS = 1` of the truth, which sets the second stage's radius.
pub const WARM_EPS: f64 = 1.0 / 3.0;

/// `R = D + √(2 ln(2md/δ))`: with probability `1 − δ`, all `m` draws from
/// `𝒩(μ*, I)` with `‖μ*‖ ≤ D` lie in `B_∞(0, R)`.
pub fn choose_r(d_bound: f64, m: usize, d: usize, delta: f64) -> f64 {
    choose_r_f64(d_bound, m as f64, d, delta)
}

fn choose_r_f64(d_bound: f64, m: f64, d: usize, delta: f64) -> f64 {
    d_bound + (2.0 * (2.0 * m.max(1.0) * d as f64 / delta).ln()).sqrt()
}

/// Diagnostics for one inner stage of the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    pub level: usize,
    pub gamma: f64,
    pub radius: f64,
    pub steps: usize,
    /// Norm of the stage average.
    pub average_norm: f64,
    /// Largest distance of any iterate from the center of the feasible ball.
    pub max_distance_from_center: f64,
    /// Largest distance of any iterate from the stage anchor.
    pub max_distance_from_anchor: f64,
    /// Cells that missed the localization box and were replaced by a point.
    pub replaced_cells: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs `steps` projected steps from `anchor` onto `k ∩ B(anchor, radius)`
/// and returns the average iterate. `oracle(w)` returns a stochastic
/// gradient and whether its cell was replaced.
pub fn run_stage<F>(
    anchor: &[f64],
    k: &ProjectionBall,
    radius: f64,
    gamma: f64,
    steps: usize,
    level: usize,
    mut oracle: F,
) -> Result<(Vec<f64>, PhaseRecord)>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, bool)>,
{
    check_dim(k.dim(), anchor.len())?;
    if steps == 0 {
        return Err(Error::InvalidConfig(
            "a stage needs at least one step".into(),
        ));
    }
    let local = ProjectionBall::new(anchor.to_vec(), radius)?;
    let d = anchor.len();
    let mut w = anchor.to_vec();
    let mut sum = vec![0.0; d];
    let mut rec = PhaseRecord {
        level,
        gamma,
        radius,
        steps,
        average_norm: 0.0,
        max_distance_from_center: 0.0,
        max_distance_from_anchor: 0.0,
        replaced_cells: 0,
    };
    let mut trial = vec![0.0; d];
    for _ in 0..steps {
        let (g, replaced) = oracle(&w)?;
        rec.replaced_cells += replaced as usize;
        for i in 0..d {
            trial[i] = w[i] - gamma * g[i];
        }
        w = project_two(&trial, k, &local)?;
        for i in 0..d {
            sum[i] += w[i];
        }
        rec.max_distance_from_center = rec.max_distance_from_center.max(k.distance(&w));
        rec.max_distance_from_anchor = rec.max_distance_from_anchor.max(local.distance(&w));
    }
    let avg: Vec<f64> = sum.into_iter().map(|s| s / steps as f64).collect();
    rec.average_norm = norm(&avg);
    Ok((avg, rec))
}

/// Runs every stage of `schedule` from `warm`, each anchored at the previous
/// stage's average.
pub fn run_schedule<F>(
    schedule: &StageSchedule,
    k: &ProjectionBall,
    warm: &[f64],
    mut oracle: F,
) -> Result<(Vec<f64>, Vec<PhaseRecord>)>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, bool)>,
{
    if !k.contains(warm) {
        return Err(Error::InvalidConfig(
            "warm start lies outside the feasible ball".into(),
        ));
    }
    let mut w = warm.to_vec();
    let mut records = Vec::with_capacity(schedule.tau);
    for level in 1..=schedule.tau {
        let (avg, rec) = run_stage(
            &w,
            k,
            schedule.radius(level),
            schedule.gamma(level),
            schedule.steps_at(level),
            level,
            &mut oracle,
        )?;
        w = avg;
        records.push(rec);
    }
    Ok((w, records))
}

/// One projected SGD stage on coarse cells drawn from `stream`.
#[allow(clippy::too_many_arguments)]
pub fn psgd_stage(
    stream: &mut CoarseStream,
    anchor: &[f64],
    radius: f64,
    gamma: f64,
    steps: usize,
    ball: &ProjectionBall,
    r: f64,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<(Vec<f64>, PhaseRecord)> {
    run_stage(anchor, ball, radius, gamma, steps, 1, |w| {
        let cell = stream.next_cell()?;
        let gs = stochastic_gradient(w, &cell, r, rng, policy)?;
        Ok((gs.g, gs.cell_radius_clipped))
    })
}

/// All stages of `schedule` on cells drawn from `stream`.
pub fn iterative_psgd(
    stream: &mut CoarseStream,
    schedule: &StageSchedule,
    ball: &ProjectionBall,
    warm: &[f64],
    r: f64,
    rng: &mut SeededRng,
    policy: &SamplerPolicy,
) -> Result<(Vec<f64>, Vec<PhaseRecord>)> {
    run_schedule(schedule, ball, warm, |w| {
        let cell = stream.next_cell()?;
        let gs = stochastic_gradient(w, &cell, r, rng, policy)?;
        Ok((gs.g, gs.cell_radius_clipped))
    })
}

/// Knobs for [`estimate_mean`].
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Target accuracy ε in Euclidean distance.
    pub eps: f64,
    /// Failure probability δ.
    pub delta: f64,
    /// Information-preservation parameter α, supplied by the user.
    pub alpha: f64,
    /// Radius D of the ball known to contain the true mean.
    pub warm_radius: f64,
    /// Center of that ball; the origin when `None`.
    pub center: Option<Vec<f64>>,
    /// Override for the initial gap bound of the first stage.
    pub eps0: Option<f64>,
    /// Independent runs per stage; `⌈48 ln(1/δ)⌉` when `None`.
    pub boost_repeats: Option<usize>,
    pub constants: ScheduleConstants,
    /// Use a warm-start stage when `eps < WARM_EPS`.
    pub two_stage: bool,
    /// Fixed-budget mode: spend exactly this many cells in one stage.
    pub budget: Option<usize>,
    pub policy: SamplerPolicy,
    /// Refuse schedules needing more cells than this.
    pub max_samples: usize,
}

impl EstimatorConfig {
    pub fn new(eps: f64, delta: f64, alpha: f64, warm_radius: f64) -> Self {
        Self {
            eps,
            delta,
            alpha,
            warm_radius,
            center: None,
            eps0: None,
            boost_repeats: None,
            constants: ScheduleConstants::practical(),
            two_stage: true,
            budget: None,
            policy: SamplerPolicy::default(),
            max_samples: 2_000_000_000,
        }
    }

    pub fn repeats(&self) -> usize {
        self.boost_repeats
            .unwrap_or_else(|| (48.0 * (1.0 / self.delta).ln()).ceil().max(1.0) as usize)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.budget.is_none() && !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.warm_radius > 0.0 && self.warm_radius.is_finite()) {
            return bad(format!(
                "warm radius must be positive, got {}",
                self.warm_radius
            ));
        }
        if let Some(c) = &self.center {
            check_dim(d, c.len())?;
        }
        if self.eps0.is_some_and(|e| !(e > 0.0))
            || self.boost_repeats == Some(0)
            || self.budget == Some(0)
        {
            return bad("eps0, boost repeats and budget must be positive".into());
        }
        self.constants.validate()?;
        self.policy.validate()
    }
}

/// Planned work for one boosted stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    pub target_eps: f64,
    pub radius: f64,
    pub schedule: StageSchedule,
    pub repeats: usize,
}

impl StagePlan {
    pub fn samples(&self) -> usize {
        self.schedule.total() * self.repeats
    }
}

/// The full plan: stages and the localization radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub stages: Vec<StagePlan>,
    pub r: f64,
}

impl Plan {
    pub fn samples(&self) -> usize {
        self.stages.iter().map(StagePlan::samples).sum()
    }
}

fn stage_inputs(
    config: &EstimatorConfig,
    d: usize,
    radius: f64,
    r: f64,
    eps0: Option<f64>,
) -> ScheduleInputs {
    let c = &config.constants;
    let df = d as f64;
    let (g2, default_eps0) = match c.bounds {
        Bounds::Worst => {
            let g2 = 4.0 * (radius * radius + df * r * r + df);
            (g2, radius * g2.sqrt())
        }
        Bounds::Smooth => (df + radius * radius, 0.5 * radius * radius),
    };
    let kappa = std::f64::consts::SQRT_2 * config.alpha;
    ScheduleInputs {
        eps0: eps0.unwrap_or(default_eps0),
        g2,
        eta: c.eta_factor * kappa,
        rho: c.rho_factor * kappa * kappa,
        safety: c.safety,
        max_step: c.max_step,
    }
}

fn plan_with_r(config: &EstimatorConfig, d: usize, r: f64) -> Result<Vec<StagePlan>> {
    let repeats = config.repeats();
    let d_bound = config.warm_radius;
    if let Some(n) = config.budget {
        let per = n / repeats;
        let inputs = stage_inputs(config, d, d_bound, r, config.eps0);
        let schedule = StageSchedule::for_budget(inputs, per)?;
        let target = (schedule.eps_f.sqrt() / inputs.eta).max(0.0);
        return Ok(vec![StagePlan {
            target_eps: target,
            radius: d_bound,
            schedule,
            repeats,
        }]);
    }
    stage_targets(config, d, r)
        .into_iter()
        .map(|(eps, radius, inputs, eps_f)| {
            let schedule = StageSchedule::for_gap(inputs, eps_f)?;
            Ok(StagePlan {
                target_eps: eps,
                radius,
                schedule,
                repeats,
            })
        })
        .collect()
}

/// Accuracy-mode stages as (target ε, ball radius, inputs, gap target).
fn stage_targets(
    config: &EstimatorConfig,
    d: usize,
    r: f64,
) -> Vec<(f64, f64, ScheduleInputs, f64)> {
    let d_bound = config.warm_radius;
    let mut targets = Vec::new();
    if config.two_stage && config.eps < WARM_EPS && d_bound > 3.0 * WARM_EPS {
        targets.push((WARM_EPS, d_bound, config.eps0));
        targets.push((config.eps, 3.0 * WARM_EPS, None));
    } else {
        targets.push((config.eps, d_bound, config.eps0));
    }
    targets
        .into_iter()
        .map(|(eps, radius, eps0)| {
            let inputs = stage_inputs(config, d, radius, r, eps0);
            (
                eps,
                radius,
                inputs,
                inputs.rho.min(inputs.eta * inputs.eta * eps * eps),
            )
        })
        .collect()
}

/// Observations the accuracy-mode schedule asks for, in floating point.
/// Unlike [`plan`] it is defined for schedules far too long to run, such as
/// those of [`ScheduleConstants::worst_case`].
pub fn planned_cost(config: &EstimatorConfig, d: usize) -> Result<f64> {
    config.validate(d)?;
    let repeats = config.repeats() as f64;
    let cost = |r: f64| -> f64 {
        stage_targets(config, d, r)
            .into_iter()
            .map(|(_, _, inputs, eps_f)| {
                let (tau, steps) = schedule_size(inputs, eps_f);
                repeats * tau as f64 * steps
            })
            .sum()
    };
    let mut r = choose_r(config.warm_radius, 1, d, config.delta);
    let mut m = cost(r);
    for _ in 0..8 {
        let next = choose_r_f64(config.warm_radius, m, d, config.delta);
        if (next - r).abs() < 1e-12 {
            break;
        }
        r = next;
        m = cost(r);
    }
    Ok(m)
}

/// Plans the schedule without touching any data. `R` depends on the total
/// sample count, which in turn may depend on `R`; a few fixed-point rounds
/// settle both.
pub fn plan(config: &EstimatorConfig, d: usize) -> Result<Plan> {
    config.validate(d)?;
    let delta = config.delta;
    let mut r = choose_r(config.warm_radius, 1, d, delta);
    let mut stages = plan_with_r(config, d, r)?;
    for _ in 0..4 {
        let m = stages.iter().map(StagePlan::samples).sum();
        let next = choose_r(config.warm_radius, m, d, delta);
        if (next - r).abs() < 1e-12 {
            break;
        }
        r = next;
        stages = plan_with_r(config, d, r)?;
    }
    Ok(Plan { stages, r })
}

/// Results of one boosted stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub target_eps: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub schedule: StageSchedule,
    pub candidates: Vec<Vec<f64>>,
    pub chosen: usize,
    pub confident: bool,
    /// Inner-stage records of the chosen run.
    pub phases: Vec<PhaseRecord>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub mu_hat: Vec<f64>,
    pub samples_consumed: usize,
    /// Localization radius used to clip cells.
    pub r: f64,
    pub stages: Vec<StageReport>,
    /// Candidates of the final stage.
    pub boost_candidates: Vec<Vec<f64>>,
    pub wall_time: Duration,
    pub warnings: Vec<String>,
}

/// Estimates the mean of the Gaussian behind `stream`.
///
/// Each stage draws its cells up front as disjoint substreams, one per
/// boosting run, and runs those in parallel on generators forked from `rng`
/// by (stage, run) index. Results therefore do not depend on the number of
/// worker threads.
pub fn estimate_mean(
    stream: &mut CoarseStream,
    config: &EstimatorConfig,
    rng: &SeededRng,
) -> Result<EstimateReport> {
    let start = Instant::now();
    let d = stream.dim();
    let plan = plan(config, d)?;
    let needed = plan.samples();
    if needed > config.max_samples {
        return Err(Error::InvalidConfig(format!(
            "schedule needs {needed} cells, above the limit of {}",
            config.max_samples
        )));
    }
    if let Some(rem) = stream.remaining() {
        if rem < needed {
            return Err(Error::StreamExhausted {
                consumed: stream.consumed() + rem,
            });
        }
    }
    let start_consumed = stream.consumed();
    let mut center = config.center.clone().unwrap_or_else(|| vec![0.0; d]);
    let mut reports = Vec::with_capacity(plan.stages.len());
    let mut warnings = Vec::new();
    for (si, sp) in plan.stages.iter().enumerate() {
        let ball = ProjectionBall::new(center.clone(), sp.radius)?;
        let per = sp.schedule.total();
        let subs: Vec<CoarseStream> = (0..sp.repeats)
            .map(|_| stream.take(per))
            .collect::<Result<_>>()?;
        let stage_rng = rng.fork(si as u64);
        let runs: Vec<(Vec<f64>, Vec<PhaseRecord>)> = subs
            .into_par_iter()
            .enumerate()
            .map(|(i, mut sub)| {
                let mut run_rng = stage_rng.fork(i as u64);
                iterative_psgd(
                    &mut sub,
                    &sp.schedule,
                    &ball,
                    &center,
                    plan.r,
                    &mut run_rng,
                    &config.policy,
                )
            })
            .collect::<Result<_>>()?;
        let candidates: Vec<Vec<f64>> = runs.iter().map(|(w, _)| w.clone()).collect();
        let outcome = boost_by_clustering(&candidates, sp.target_eps)?;
        if !outcome.confident && sp.repeats >= 3 {
            warnings.push(format!(
                "stage {si}: no candidate had a majority within 2·{:.3e}; used the median-distance fallback",
                sp.target_eps
            ));
        }
        let phases = runs[outcome.index].1.clone();
        let replaced: usize = runs
            .iter()
            .flat_map(|(_, p)| p.iter().map(|r| r.replaced_cells))
            .sum();
        if replaced > 0 {
            warnings.push(format!(
                "stage {si}: {replaced} cells missed the clipping box and were replaced by points"
            ));
        }
        reports.push(StageReport {
            target_eps: sp.target_eps,
            center: center.clone(),
            radius: sp.radius,
            schedule: sp.schedule.clone(),
            candidates,
            chosen: outcome.index,
            confident: outcome.confident,
            phases,
            samples: sp.samples(),
        });
        center = outcome.point;
    }
    Ok(EstimateReport {
        mu_hat: center,
        samples_consumed: stream.consumed() - start_consumed,
        r: plan.r,
        boost_candidates: reports
            .last()
            .map(|s| s.candidates.clone())
            .unwrap_or_default(),
        stages: reports,
        wall_time: start.elapsed(),
        warnings,
    })
}
