//! Threshold governor: turns the gap between observed and scheduled counts
//! into densify/prune threshold commands, one per actuation.

use thiserror::Error;

use crate::config::{GovernorConfig, RegimeSpec};
use crate::trajectory::TargetSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GovernorError {
    #[error("iteration {t} lies outside the densification window [{from}, {until}]")]
    OutsideWindow { t: u64, from: u64, until: u64 },
    #[error("iteration {t} is not cadence-aligned (start {from}, cadence {cadence})")]
    OffCadence { t: u64, from: u64, cadence: u64 },
}

/// Which arm of the control law produced a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    UnderTarget,
    OverTarget,
    Deadband,
    Lockout,
    CapFrozen,
    Uncontrolled,
}

impl Branch {
    /// Stable token used in CSV output.
    pub fn token(&self) -> &'static str {
        match self {
            Branch::UnderTarget => "under_target",
            Branch::OverTarget => "over_target",
            Branch::Deadband => "deadband",
            Branch::Lockout => "lockout",
            Branch::CapFrozen => "cap_frozen",
            Branch::Uncontrolled => "uncontrolled",
        }
    }

    pub fn from_token(token: &str) -> Option<Branch> {
        Some(match token {
            "under_target" => Branch::UnderTarget,
            "over_target" => Branch::OverTarget,
            "deadband" => Branch::Deadband,
            "lockout" => Branch::Lockout,
            "cap_frozen" => Branch::CapFrozen,
            "uncontrolled" => Branch::Uncontrolled,
            _ => return None,
        })
    }
}

/// Thresholds the plant must apply for one actuation, plus the bookkeeping
/// that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCommand {
    pub tau_den_eff: f64,
    pub tau_prune_eff: f64,
    pub branch: Branch,
    /// Per-actuation correction the controller asked for (signed).
    pub quota: i64,
    /// Scheduled count minus observed count at command time.
    pub gap: i64,
}

/// Number of actuations still available at iteration `t`, including the one
/// at `t` itself.
pub fn actuations_left(t: u64, cfg: &GovernorConfig) -> Result<u64, GovernorError> {
    if t > cfg.densify_until {
        return Err(GovernorError::OutsideWindow {
            t,
            from: cfg.densify_from,
            until: cfg.densify_until,
        });
    }
    Ok(1 + (cfg.densify_until - t) / cfg.cadence)
}

/// Deadband half-width around the scheduled count.
pub fn deadband_width(n_star: u64, cfg: &GovernorConfig) -> f64 {
    (cfg.deadband_fraction * n_star as f64).max(cfg.deadband_floor as f64)
}

/// `gap / actuations_left`, rounded half away from zero, then zeroed by the
/// deadband and quota-floor rules. Inside the endgame (the final
/// `endgame_window` actuations) the floor drops to 1.
pub fn compute_quota(gap: i64, actuations_left: u64, n_star: u64, cfg: &GovernorConfig) -> i64 {
    let q = div_round_half_away(gap, actuations_left);
    if (gap.unsigned_abs() as f64) < deadband_width(n_star, cfg) {
        return 0;
    }
    let q_min = if actuations_left <= cfg.endgame_window {
        1
    } else {
        (cfg.quota_floor_fraction * cfg.target_count as f64).ceil() as u64
    };
    if q.unsigned_abs() < q_min {
        return 0;
    }
    q
}

fn div_round_half_away(num: i64, den: u64) -> i64 {
    let magnitude = ((2 * num.unsigned_abs() + den) / (2 * den)) as i64;
    if num < 0 {
        -magnitude
    } else {
        magnitude
    }
}

/// Persisted controller state carried across actuations of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GovernorState {
    tau_den: f64,
    tau_prune: f64,
    last_count: Option<u64>,
    last_actuation_t: Option<u64>,
    lockout_until: Option<u64>,
    cap_hit: bool,
}

impl GovernorState {
    pub fn new(cfg: &GovernorConfig) -> Self {
        GovernorState {
            tau_den: cfg.tau_den_default,
            tau_prune: cfg.tau_prune_default,
            last_count: None,
            last_actuation_t: None,
            lockout_until: None,
            cap_hit: false,
        }
    }

    /// Persisted densify threshold (not the per-actuation effective value).
    pub fn tau_den(&self) -> f64 {
        self.tau_den
    }

    /// Persisted prune threshold.
    pub fn tau_prune(&self) -> f64 {
        self.tau_prune
    }

    pub fn cap_hit(&self) -> bool {
        self.cap_hit
    }

    /// Change in population since the previous observation; the first
    /// observation of a run reports 0.
    pub fn observe_delta(&mut self, n_now: u64) -> i64 {
        let delta = match self.last_count {
            Some(prev) => n_now as i64 - prev as i64,
            None => 0,
        };
        self.last_count = Some(n_now);
        delta
    }

    /// Registers an opacity reset at `t_reset`; prune pressure is floored for
    /// the following `lockout_duration` iterations. A later reset overwrites
    /// the window.
    pub fn notify_reset(&mut self, t_reset: u64, cfg: &GovernorConfig) {
        self.lockout_until = Some(t_reset + cfg.lockout_duration);
    }

    fn lockout_active(&self, t: u64) -> bool {
        matches!(self.lockout_until, Some(until) if t < until)
    }

    /// Target-point control law.
    ///
    /// Outside the deadband the gap is amortized into a per-actuation quota
    /// and the realized change is fed back into one persisted threshold:
    /// under target the densify threshold is re-tuned (prune pressure floored
    /// to its minimum), over target the prune threshold is re-tuned (densify
    /// pressure pushed to its maximum). Updates are multiplicative with the
    /// log-step clamped to `step_clamp` and the result clamped to the
    /// configured bounds. A zeroed quota asks for no correction, so it never
    /// re-tunes a persisted threshold; the branch's effective floor/ceiling
    /// still applies. During a lockout window the effective prune threshold
    /// is pinned to its minimum regardless of the gap.
    pub fn tpc_command(
        &mut self,
        t: u64,
        n_now: u64,
        cfg: &GovernorConfig,
    ) -> Result<ThresholdCommand, GovernorError> {
        let (gap, n_star, delta) = self.begin_actuation(t, n_now, cfg)?;
        let left = actuations_left(t, cfg).expect("inside window");
        let quota = compute_quota(gap, left, n_star, cfg);
        let width = deadband_width(n_star, cfg);

        let (mut tau_den_eff, mut tau_prune_eff, mut branch);
        if gap as f64 > width {
            if quota != 0 {
                let error = (quota - delta) as f64;
                self.tau_den = bounded_update(
                    self.tau_den,
                    -cfg.gain_den * error,
                    cfg.step_clamp,
                    cfg.tau_den_min(),
                    cfg.tau_den_max(),
                );
            }
            tau_den_eff = self.tau_den;
            tau_prune_eff = cfg.tau_prune_min();
            branch = Branch::UnderTarget;
        } else if (gap as f64) < -width {
            if quota != 0 {
                let error = (delta - quota) as f64;
                self.tau_prune = bounded_update(
                    self.tau_prune,
                    cfg.gain_prune * error,
                    cfg.step_clamp,
                    cfg.tau_prune_min(),
                    cfg.tau_prune_max(),
                );
            }
            tau_den_eff = cfg.tau_den_max();
            tau_prune_eff = self.tau_prune;
            branch = Branch::OverTarget;
        } else {
            tau_den_eff = self.tau_den;
            tau_prune_eff = self.tau_prune;
            branch = Branch::Deadband;
        }

        if self.lockout_active(t) {
            tau_prune_eff = cfg.tau_prune_min();
            branch = Branch::Lockout;
        }
        let _ = &mut tau_den_eff;

        Ok(ThresholdCommand { tau_den_eff, tau_prune_eff, branch, quota, gap })
    }

    /// Hard-cutoff law: default thresholds until the budget is first reached,
    /// then churn-suppressing thresholds forever (the cap latches even if the
    /// count later drops below the budget).
    pub fn cutoff_command(
        &mut self,
        t: u64,
        n_now: u64,
        budget: u64,
        cfg: &GovernorConfig,
    ) -> Result<ThresholdCommand, GovernorError> {
        let (gap, _, _) = self.begin_actuation(t, n_now, cfg)?;
        if n_now >= budget {
            self.cap_hit = true;
        }
        let cmd = if self.cap_hit {
            ThresholdCommand {
                tau_den_eff: cfg.tau_den_max(),
                tau_prune_eff: cfg.tau_prune_min(),
                branch: Branch::CapFrozen,
                quota: 0,
                gap,
            }
        } else {
            ThresholdCommand {
                tau_den_eff: cfg.tau_den_default,
                tau_prune_eff: cfg.tau_prune_default,
                branch: Branch::Uncontrolled,
                quota: 0,
                gap,
            }
        };
        Ok(cmd)
    }

    /// Baseline law: default thresholds on every actuation.
    pub fn uncontrolled_command(
        &mut self,
        t: u64,
        n_now: u64,
        cfg: &GovernorConfig,
    ) -> Result<ThresholdCommand, GovernorError> {
        let (gap, _, _) = self.begin_actuation(t, n_now, cfg)?;
        Ok(ThresholdCommand {
            tau_den_eff: cfg.tau_den_default,
            tau_prune_eff: cfg.tau_prune_default,
            branch: Branch::Uncontrolled,
            quota: 0,
            gap,
        })
    }

    /// Dispatches to the regime's law.
    pub fn command(
        &mut self,
        regime: &RegimeSpec,
        t: u64,
        n_now: u64,
        cfg: &GovernorConfig,
    ) -> Result<ThresholdCommand, GovernorError> {
        match regime {
            RegimeSpec::Uncontrolled => self.uncontrolled_command(t, n_now, cfg),
            RegimeSpec::HardCutoff { budget } => self.cutoff_command(t, n_now, *budget, cfg),
            RegimeSpec::Tpc => self.tpc_command(t, n_now, cfg),
        }
    }

    /// Shared per-actuation bookkeeping: window/cadence checks, delta
    /// observation, and the gap against the schedule.
    fn begin_actuation(
        &mut self,
        t: u64,
        n_now: u64,
        cfg: &GovernorConfig,
    ) -> Result<(i64, u64, i64), GovernorError> {
        if t < cfg.densify_from || t > cfg.densify_until {
            return Err(GovernorError::OutsideWindow {
                t,
                from: cfg.densify_from,
                until: cfg.densify_until,
            });
        }
        if !(t - cfg.densify_from).is_multiple_of(cfg.cadence) {
            return Err(GovernorError::OffCadence {
                t,
                from: cfg.densify_from,
                cadence: cfg.cadence,
            });
        }
        debug_assert!(self.last_actuation_t.is_none_or(|prev| prev <= t));
        self.last_actuation_t = Some(t);
        let delta = self.observe_delta(n_now);
        let n_star = TargetSchedule::from_config(cfg).target_count(t);
        let gap = n_star as i64 - n_now as i64;
        Ok((gap, n_star, delta))
    }
}

fn bounded_update(current: f64, raw_step: f64, clamp: f64, min: f64, max: f64) -> f64 {
    let step = raw_step.clamp(-clamp, clamp);
    (current * step.exp()).clamp(min, max)
}
