//! The scheduled count N*(t): flat before the window, fast-start quadratic
//! inside it, flat at the target afterwards.

use thiserror::Error;

use crate::config::GovernorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("easing input {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("window start must precede window end")]
    EmptyWindow,
}

/// Fast-start easing `2x - x^2`: unit slope budget spent early, zero slope at
/// the end. Errors outside the unit interval.
pub fn ease(x: f64) -> Result<f64, TrajectoryError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(TrajectoryError::OutOfDomain(x));
    }
    Ok(ease_clamped(x))
}

fn ease_clamped(x: f64) -> f64 {
    x * (2.0 - x)
}

/// Piecewise count schedule between an initial and a target population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSchedule {
    n0: u64,
    k: u64,
    t_start: u64,
    t_stop: u64,
}

impl TargetSchedule {
    pub fn new(n0: u64, k: u64, t_start: u64, t_stop: u64) -> Result<Self, TrajectoryError> {
        if t_start >= t_stop {
            return Err(TrajectoryError::EmptyWindow);
        }
        Ok(TargetSchedule { n0, k, t_start, t_stop })
    }

    pub fn from_config(cfg: &GovernorConfig) -> Self {
        TargetSchedule {
            n0: cfg.initial_count,
            k: cfg.target_count,
            t_start: cfg.densify_from,
            t_stop: cfg.densify_until,
        }
    }

    /// N*(t), rounded to the nearest integer count.
    pub fn target_count(&self, t: u64) -> u64 {
        if t <= self.t_start {
            return self.n0;
        }
        if t >= self.t_stop {
            return self.k;
        }
        let x = (t - self.t_start) as f64 / (self.t_stop - self.t_start) as f64;
        let s = ease_clamped(x);
        let value = self.n0 as f64 + s * (self.k as f64 - self.n0 as f64);
        value.round() as u64
    }
}
