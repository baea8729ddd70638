//! Synthetic densify/prune plant: a seeded stand-in for a splatting trainer,
//! so controller behavior can be exercised and falsified at desk scale.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{ConfigError, PlantConfig};

/// Opacity-law rounds applied per primitive at construction, enough to land
/// initial opacities in the law's stationary region.
const OPACITY_BURN_IN: u32 = 128;

/// One splat, reduced to the two statistics the control loop observes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPrimitive {
    opacity: f64,
    log_grad: f64,
}

impl SimPrimitive {
    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    /// Running view-space gradient-magnitude proxy.
    pub fn grad_stat(&self) -> f64 {
        self.log_grad.exp()
    }
}

/// A population of primitives plus the seeded stream driving its dynamics.
///
/// All randomness is drawn from one stream, consumed in collection order, so
/// a plant's entire trajectory is a pure function of (seed, laws, call
/// sequence). Cloning forks the stream: clones replay identically.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPlant {
    primitives: Vec<SimPrimitive>,
    rng: ChaCha8Rng,
    law: PlantConfig,
    /// Cumulative log of the gradient-scale decay, advanced once per interval.
    log_scale: f64,
}

impl SimPlant {
    pub fn new(seed: u64, n0: u64, law: &PlantConfig) -> Result<SimPlant, ConfigError> {
        law.validate()?;
        let mut plant = SimPlant {
            primitives: Vec::with_capacity(n0 as usize),
            rng: ChaCha8Rng::seed_from_u64(seed),
            law: law.clone(),
            log_scale: 0.0,
        };
        for _ in 0..n0 {
            let mut opacity = 0.5;
            for _ in 0..OPACITY_BURN_IN {
                opacity = plant.opacity_step(opacity);
            }
            let log_grad = plant.draw_log_grad();
            plant.primitives.push(SimPrimitive { opacity, log_grad });
        }
        Ok(plant)
    }

    pub fn count(&self) -> u64 {
        self.primitives.len() as u64
    }

    pub fn primitives(&self) -> &[SimPrimitive] {
        &self.primitives
    }

    /// Advances one cadence interval of "training": every primitive redraws
    /// its gradient statistic (against a scale that fades each interval, the
    /// way real gradients fade as a scene converges) and its opacity either
    /// drifts toward 1 or, with the decay probability, loses opacity as a
    /// redundant splat would.
    pub fn step_interval(&mut self) {
        self.log_scale += self.law.grad_scale_decay.ln();
        for i in 0..self.primitives.len() {
            let log_grad = self.law.grad_log_mean
                + self.log_scale
                + self.law.grad_log_sd * self.rng.sample::<f64, _>(StandardNormal);
            let opacity = self.opacity_step(self.primitives[i].opacity);
            self.primitives[i] = SimPrimitive { opacity, log_grad };
        }
    }

    /// Every primitive whose gradient statistic reaches `tau_den_eff` spawns
    /// one child (clone-only): child opacity equals the parent's, gradient
    /// statistic redrawn. Returns the number added.
    pub fn densify(&mut self, tau_den_eff: f64) -> u64 {
        debug_assert!(tau_den_eff > 0.0);
        let log_tau = tau_den_eff.ln();
        let parents = self.primitives.len();
        for i in 0..parents {
            if self.primitives[i].log_grad >= log_tau {
                let opacity = self.primitives[i].opacity;
                let log_grad = self.draw_log_grad();
                self.primitives.push(SimPrimitive { opacity, log_grad });
            }
        }
        (self.primitives.len() - parents) as u64
    }

    /// Removes every primitive with opacity below `tau_prune_eff`; returns
    /// the number removed.
    pub fn prune(&mut self, tau_prune_eff: f64) -> u64 {
        debug_assert!(tau_prune_eff > 0.0 && tau_prune_eff < 1.0);
        let before = self.primitives.len();
        self.primitives.retain(|p| p.opacity >= tau_prune_eff);
        (before - self.primitives.len()) as u64
    }

    /// Clamps every opacity to at most the reset value; the drift law
    /// restores opacities over the following intervals.
    pub fn reset_opacity(&mut self) {
        for p in &mut self.primitives {
            p.opacity = p.opacity.min(self.law.reset_value);
        }
    }

    fn draw_log_grad(&mut self) -> f64 {
        self.law.grad_log_mean
            + self.log_scale
            + self.law.grad_log_sd * self.rng.sample::<f64, _>(StandardNormal)
    }

    /// One opacity-law round: with the decay probability the opacity is
    /// multiplied by the decay factor; otherwise its gap to 1 shrinks by the
    /// drift rate (so opacities approach but never reach 1).
    fn opacity_step(&mut self, opacity: f64) -> f64 {
        if self.rng.random_bool(self.law.decay_probability) {
            opacity * self.law.decay_factor
        } else {
            1.0 - (1.0 - opacity) * (1.0 - self.law.drift_rate)
        }
    }
}
