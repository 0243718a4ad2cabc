use crate::error::{Error, Result};

/// How the initial gap `ε₀` and the gradient second-moment bound `G²` are
/// obtained for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bounds {
    /// Worst-case bounds from the convergence analysis, e.g.
    /// `G² = 4(D² + dR² + d)` and `ε₀ = D·G` for mean estimation.
    Worst,
    /// Bounds implied by smoothness of the objective, e.g. `ε₀ = D²/2` and
    /// `G² = d + D²` for mean estimation, whose Hessian is `⪯ I`.
    Smooth,
}

/// Constants feeding the staged schedule.
///
/// The schedule keeps the shape `τ = ⌈log₂(ε₀/ε_f)⌉`,
/// `C₀ = 2ε₀/(η√ε_f)`, `γ₀ = ε₀/(sG²τ)` and `T = 4s²G²τ²/(η²ε_f)`, where
/// `s` is [`safety`](Self::safety). Local growth is `η = eta_factor · κ` and
/// `ρ = rho_factor · κ²` with `κ = √2·α` for mean estimation and `κ = α·b`
/// for friction regression.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleConstants {
    pub safety: f64,
    pub eta_factor: f64,
    pub rho_factor: f64,
    /// Upper bound on the step size in units of `1/L`, `L` the smoothness constant.
    pub max_step: f64,
    pub bounds: Bounds,
}

impl ScheduleConstants {
    /// The constants of the convergence analysis. Sample counts are
    /// astronomically large; useful for planning and scaling studies.
    pub fn worst_case() -> Self {
        Self {
            safety: 300.0,
            eta_factor: 1.0 / 200.0,
            rho_factor: 1.0 / 360_000.0,
            max_step: f64::INFINITY,
            bounds: Bounds::Worst,
        }
    }

    /// Constants tuned for desk-scale runs. Local growth uses the exact
    /// quadratic rate `η² = κ²/4`, bounds come from smoothness, and the
    /// safety factor is calibrated on grid partitions.
    pub fn practical() -> Self {
        Self {
            safety: 1.0 / 64.0,
            eta_factor: 0.5,
            rho_factor: 0.25,
            max_step: 1.0,
            bounds: Bounds::Smooth,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && !v.is_nan();
        if pos(self.safety) && pos(self.eta_factor) && pos(self.rho_factor) && pos(self.max_step) {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "schedule constants must be positive: {self:?}"
            )))
        }
    }
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        Self::practical()
    }
}

/// Inputs shared by every schedule: initial gap, second-moment bound,
/// local growth rate and validity radius, and the step cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleInputs {
    pub eps0: f64,
    pub g2: f64,
    pub eta: f64,
    pub rho: f64,
    pub safety: f64,
    pub max_step: f64,
}

/// Number of stages and steps per stage for gap target `eps_f` (clamped to
/// `rho`), with the step count left in floating point so that schedules
/// too long to run can still be sized.
pub fn schedule_size(inputs: ScheduleInputs, eps_f: f64) -> (usize, f64) {
    let ScheduleInputs {
        eps0,
        g2,
        eta,
        rho,
        safety,
        ..
    } = inputs;
    let eps_f = eps_f.min(rho);
    let tau = ((eps0 / eps_f).log2().ceil()).max(1.0) as usize;
    let tf = tau as f64;
    (
        tau,
        (4.0 * safety * safety * g2 * tf * tf / (eta * eta * eps_f))
            .ceil()
            .max(1.0),
    )
}

/// A fully instantiated staged schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSchedule {
    pub eps0: f64,
    pub g2: f64,
    pub eta: f64,
    /// Function-value target.
    pub eps_f: f64,
    pub tau: usize,
    /// Steps per stage.
    pub steps: usize,
    /// Steps in the last stage; differs from `steps` only when a budget's
    /// remainder is assigned to it.
    pub last_steps: usize,
    pub gamma0: f64,
    pub c0: f64,
    pub max_step: f64,
}

impl StageSchedule {
    /// Schedule reaching function gap `eps_f` (clamped to `rho`).
    pub fn for_gap(inputs: ScheduleInputs, eps_f: f64) -> Result<Self> {
        let ScheduleInputs {
            eps0,
            g2,
            eta,
            rho,
            safety,
            max_step,
        } = inputs;
        for (name, v) in [
            ("eps0", eps0),
            ("G²", g2),
            ("eta", eta),
            ("rho", rho),
            ("gap target", eps_f),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let eps_f = eps_f.min(rho);
        let (tau, steps_f) = schedule_size(inputs, eps_f);
        let tf = tau as f64;
        if steps_f > 1e18 {
            return Err(Error::InvalidConfig(format!(
                "schedule needs {steps_f:e} steps per stage"
            )));
        }
        let steps = steps_f as usize;
        Ok(Self {
            eps0,
            g2,
            eta,
            eps_f,
            tau,
            steps,
            last_steps: steps,
            gamma0: eps0 / (safety * g2 * tf),
            c0: 2.0 * eps0 / (eta * eps_f.sqrt()),
            max_step,
        })
    }

    /// Fixed-budget schedule. The localizing stages get the most accurate
    /// target whose stages fit in half of `budget`; the final stage then
    /// receives every remaining index, so its length is proportional to the
    /// budget whatever the number of stages.
    pub fn for_budget(inputs: ScheduleInputs, budget: usize) -> Result<Self> {
        let share = budget / 2;
        let fits = |eps_f: f64| -> Result<bool> {
            Ok(Self::for_gap(inputs, eps_f)?.total_f() <= share as f64)
        };
        let mut hi = inputs.rho;
        if !fits(hi)? {
            // even the loosest target is too expensive; shrink the stages
            let s = Self::for_gap(inputs, hi)?;
            return Ok(s.stretched(share)?.absorb_remainder(budget));
        }
        let mut lo = hi * 1e-12;
        if fits(lo)? {
            hi = lo;
        } else {
            for _ in 0..200 {
                let mid = (lo * hi).sqrt();
                if fits(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi / lo < 1.0 + 1e-9 {
                    break;
                }
            }
        }
        Ok(Self::for_gap(inputs, hi)?.absorb_remainder(budget))
    }

    fn stretched(mut self, budget: usize) -> Result<Self> {
        let steps = budget / self.tau;
        if steps == 0 {
            return Err(Error::InsufficientData {
                required: self.tau,
                available: budget,
            });
        }
        self.steps = steps;
        self.last_steps = steps;
        Ok(self)
    }

    /// Assigns every index beyond `tau · steps` up to `available` to the last stage.
    pub fn absorb_remainder(mut self, available: usize) -> Self {
        let used = (self.tau - 1) * self.steps;
        if available > used + self.steps {
            self.last_steps = available - used;
        }
        self
    }

    fn total_f(&self) -> f64 {
        self.tau as f64 * self.steps as f64
    }

    /// Total oracle calls.
    pub fn total(&self) -> usize {
        (self.tau - 1) * self.steps + self.last_steps
    }

    /// Steps in stage `level` (1-based).
    pub fn steps_at(&self, level: usize) -> usize {
        if level == self.tau {
            self.last_steps
        } else {
            self.steps
        }
    }

    /// `γ_ℓ = 2^{−ℓ}γ₀`, capped at the step limit. A last stage lengthened
    /// by a remainder keeps `γ·√T` fixed.
    pub fn gamma(&self, level: usize) -> f64 {
        let mut g = self.gamma0 * 0.5f64.powi(level as i32);
        if level == self.tau && self.last_steps > self.steps {
            g *= (self.steps as f64 / self.last_steps as f64).sqrt();
        }
        g.min(self.max_step)
    }

    /// `C_ℓ = 2^{−ℓ}C₀`.
    pub fn radius(&self, level: usize) -> f64 {
        self.c0 * 0.5f64.powi(level as i32)
    }
}
