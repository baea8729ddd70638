//! Run configuration: controller parameters, plant law parameters, and the
//! flat `key=value` file format used by the CLI.

use std::fmt;
use std::path::Path;

use thiserror::Error;

/// A configuration field failed validation or parsing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), reason: reason.into() }
    }
}

/// Which control regime drives an individual run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeSpec {
    /// Default thresholds on every actuation; the population is never steered.
    Uncontrolled,
    /// Default thresholds until the count first reaches `budget`, then churn
    /// is disabled for the rest of the run.
    HardCutoff { budget: u64 },
    /// Target-point control: thresholds are retuned every actuation to track
    /// the scheduled count.
    Tpc,
}

impl RegimeSpec {
    /// Stable token used in filenames, CSV output, and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            RegimeSpec::Uncontrolled => "uncontrolled",
            RegimeSpec::HardCutoff { .. } => "cutoff",
            RegimeSpec::Tpc => "tpc",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let RegimeSpec::HardCutoff { budget: 0 } = self {
            return Err(ConfigError::new("budget", "cutoff budget must be at least 1"));
        }
        Ok(())
    }
}

/// Controller parameters for one densification window.
///
/// `tau_den_bounds` and `tau_prune_bounds` are multipliers applied to the
/// corresponding default threshold; the absolute bounds are exposed through
/// [`GovernorConfig::tau_den_min`] and friends. Immutable after validation;
/// safe to share read-only across concurrent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct GovernorConfig {
    /// Desired final primitive count K.
    pub target_count: u64,
    /// Population size N0 at the start of the run.
    pub initial_count: u64,
    /// First actuation iteration.
    pub densify_from: u64,
    /// Last iteration of the densification window.
    pub densify_until: u64,
    /// Iterations between actuations.
    pub cadence: u64,
    pub tau_den_default: f64,
    pub tau_prune_default: f64,
    /// (min, max) multipliers on `tau_den_default`.
    pub tau_den_bounds: (f64, f64),
    /// (min, max) multipliers on `tau_prune_default`.
    pub tau_prune_bounds: (f64, f64),
    /// Per-actuation cap on |log-step| of a threshold update.
    pub step_clamp: f64,
    /// Densify-side feedback gain (per primitive of quota error).
    pub gain_den: f64,
    /// Prune-side feedback gain (per primitive of quota error).
    pub gain_prune: f64,
    /// Deadband half-width as a fraction of the scheduled count.
    pub deadband_fraction: f64,
    /// Lower bound on the deadband half-width, in primitives.
    pub deadband_floor: u64,
    /// Quota floor as a fraction of the target count.
    pub quota_floor_fraction: f64,
    /// Within this many final actuations the quota floor drops to 1 so small
    /// residual gaps can still be closed.
    pub endgame_window: u64,
    /// Iterations at which opacity resets occur.
    pub reset_schedule: Vec<u64>,
    /// Length of the post-reset prune lockout, in iterations.
    pub lockout_duration: u64,
}

impl GovernorConfig {
    /// The documented default profile.
    pub fn defaults() -> Self {
        GovernorConfig {
            target_count: 40_000,
            initial_count: 10_000,
            densify_from: 500,
            densify_until: 15_000,
            cadence: 100,
            tau_den_default: 2e-4,
            tau_prune_default: 5e-3,
            tau_den_bounds: (0.1, 10.0),
            tau_prune_bounds: (0.2, 10.0),
            step_clamp: 0.12,
            gain_den: 1e-3,
            gain_prune: 1e-3,
            deadband_fraction: 0.01,
            deadband_floor: 100,
            quota_floor_fraction: 0.01,
            endgame_window: 5,
            reset_schedule: vec![3_000, 6_000, 9_000, 12_000],
            lockout_duration: 500,
        }
    }

    pub fn tau_den_min(&self) -> f64 {
        self.tau_den_default * self.tau_den_bounds.0
    }

    pub fn tau_den_max(&self) -> f64 {
        self.tau_den_default * self.tau_den_bounds.1
    }

    pub fn tau_prune_min(&self) -> f64 {
        self.tau_prune_default * self.tau_prune_bounds.0
    }

    pub fn tau_prune_max(&self) -> f64 {
        self.tau_prune_default * self.tau_prune_bounds.1
    }

    /// Actuation iterations: `densify_from + k * cadence` for every multiple
    /// still inside the window.
    pub fn actuation_iters(&self) -> impl Iterator<Item = u64> + '_ {
        let (from, until, c) = (self.densify_from, self.densify_until, self.cadence);
        (0..).map(move |k| from + k * c).take_while(move |t| *t <= until)
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.target_count == 0 {
            return Err(ConfigError::new("target_count", "must be at least 1"));
        }
        if self.initial_count == 0 {
            return Err(ConfigError::new("initial_count", "must be at least 1"));
        }
        if self.densify_from >= self.densify_until {
            return Err(ConfigError::new(
                "densify_from",
                "densify_from must be strictly before densify_until",
            ));
        }
        if self.cadence == 0 {
            return Err(ConfigError::new("cadence", "must be at least 1"));
        }
        if self.densify_until - self.densify_from < self.cadence {
            return Err(ConfigError::new(
                "cadence",
                "window_empty: window is shorter than one cadence interval",
            ));
        }
        for (field, value) in [
            ("tau_den_default", self.tau_den_default),
            ("tau_prune_default", self.tau_prune_default),
            ("step_clamp", self.step_clamp),
            ("gain_den", self.gain_den),
            ("gain_prune", self.gain_prune),
        ] {
            if value <= 0.0 || !value.is_finite() {
                return Err(ConfigError::new(field, "must be a finite positive number"));
            }
        }
        for (field, (lo, hi)) in
            [("tau_den_bounds", self.tau_den_bounds), ("tau_prune_bounds", self.tau_prune_bounds)]
        {
            if lo <= 0.0 || !lo.is_finite() || !hi.is_finite() {
                return Err(ConfigError::new(field, "multipliers must be finite and positive"));
            }
            if lo > hi {
                return Err(ConfigError::new(field, "bounds_inverted: min multiplier exceeds max"));
            }
            if lo > 1.0 || hi < 1.0 {
                return Err(ConfigError::new(
                    field,
                    "bounds must bracket the default (min <= 1 <= max)",
                ));
            }
        }
        if self.tau_prune_max() >= 1.0 {
            return Err(ConfigError::new(
                "tau_prune_bounds",
                "absolute prune threshold bounds must stay below 1",
            ));
        }
        if !(0.0..1.0).contains(&self.deadband_fraction) {
            return Err(ConfigError::new("deadband_fraction", "must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.quota_floor_fraction) {
            return Err(ConfigError::new("quota_floor_fraction", "must lie in [0, 1)"));
        }
        if self.reset_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::new(
                "reset_schedule",
                "iterations must be strictly increasing",
            ));
        }
        Ok(())
    }
}

impl Default for GovernorConfig {
    fn default() -> Self {
        GovernorConfig::defaults()
    }
}

/// Parameters of the synthetic training plant.
///
/// Gradient statistics are drawn from a log-normal law whose scale shrinks by
/// `grad_scale_decay` each interval, mirroring how position gradients fade as
/// optimization converges. Opacities drift multiplicatively toward 1 at
/// `drift_rate`, except that with probability `decay_probability` an opacity
/// is multiplied by `decay_factor` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub grad_log_mean: f64,
    pub grad_log_sd: f64,
    /// Per-interval multiplier on the gradient scale; 1.0 freezes the law.
    pub grad_scale_decay: f64,
    pub drift_rate: f64,
    pub decay_probability: f64,
    pub decay_factor: f64,
    /// Opacities are clamped to at most this value by an opacity reset.
    pub reset_value: f64,
}

impl PlantConfig {
    pub fn defaults() -> Self {
        PlantConfig {
            grad_log_mean: (1.15e-4f64).ln(),
            grad_log_sd: 0.42,
            grad_scale_decay: 0.995,
            drift_rate: 0.05,
            decay_probability: 0.05,
            decay_factor: 0.75,
            reset_value: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.grad_log_mean.is_finite() {
            return Err(ConfigError::new("plant.grad_log_mean", "must be finite"));
        }
        if self.grad_log_sd <= 0.0 || !self.grad_log_sd.is_finite() {
            return Err(ConfigError::new("plant.grad_log_sd", "must be a finite positive number"));
        }
        if !(self.grad_scale_decay > 0.0 && self.grad_scale_decay <= 1.0) {
            return Err(ConfigError::new("plant.grad_scale_decay", "must lie in (0, 1]"));
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate <= 1.0) {
            return Err(ConfigError::new("plant.drift_rate", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.decay_probability) {
            return Err(ConfigError::new("plant.decay_probability", "must lie in [0, 1]"));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(ConfigError::new("plant.decay_factor", "must lie in (0, 1]"));
        }
        if !(self.reset_value > 0.0 && self.reset_value < 1.0) {
            return Err(ConfigError::new("plant.reset_value", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig::defaults()
    }
}

/// Full run configuration: controller plus plant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub governor: GovernorConfig,
    pub plant: PlantConfig,
}

impl Config {
    pub fn defaults() -> Self {
        Config::default()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.governor.validate()?;
        self.plant.validate()
    }

    /// Parses the flat `key=value` format. `#` starts a comment, blank lines
    /// are skipped, unknown or duplicate keys are errors.
    pub fn parse_str(text: &str) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(&format!("line {}", idx + 1), "expected `key=value`")
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::new(key, "duplicate key"));
            }
            seen.push(key.to_string());
            cfg.set_key(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(&path.display().to_string(), e.to_string()))?;
        Config::parse_str(&text)
    }

    /// Sets one field from its textual form; shared by the file parser and
    /// CLI overrides.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let g = &mut self.governor;
        let p = &mut self.plant;
        match key {
            "target_count" => g.target_count = parse_num(key, value)?,
            "initial_count" => g.initial_count = parse_num(key, value)?,
            "densify_from" => g.densify_from = parse_num(key, value)?,
            "densify_until" => g.densify_until = parse_num(key, value)?,
            "cadence" => g.cadence = parse_num(key, value)?,
            "tau_den_default" => g.tau_den_default = parse_num(key, value)?,
            "tau_prune_default" => g.tau_prune_default = parse_num(key, value)?,
            "tau_den_bounds" => g.tau_den_bounds = parse_pair(key, value)?,
            "tau_prune_bounds" => g.tau_prune_bounds = parse_pair(key, value)?,
            "step_clamp" => g.step_clamp = parse_num(key, value)?,
            "gain_den" => g.gain_den = parse_num(key, value)?,
            "gain_prune" => g.gain_prune = parse_num(key, value)?,
            "deadband_fraction" => g.deadband_fraction = parse_num(key, value)?,
            "deadband_floor" => g.deadband_floor = parse_num(key, value)?,
            "quota_floor_fraction" => g.quota_floor_fraction = parse_num(key, value)?,
            "endgame_window" => g.endgame_window = parse_num(key, value)?,
            "reset_schedule" => g.reset_schedule = parse_list(key, value)?,
            "lockout_duration" => g.lockout_duration = parse_num(key, value)?,
            "plant.grad_log_mean" => p.grad_log_mean = parse_num(key, value)?,
            "plant.grad_log_sd" => p.grad_log_sd = parse_num(key, value)?,
            "plant.grad_scale_decay" => p.grad_scale_decay = parse_num(key, value)?,
            "plant.drift_rate" => p.drift_rate = parse_num(key, value)?,
            "plant.decay_probability" => p.decay_probability = parse_num(key, value)?,
            "plant.decay_factor" => p.decay_factor = parse_num(key, value)?,
            "plant.reset_value" => p.reset_value = parse_num(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Canonical textual form; `parse_str` of the result reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let g = &self.governor;
        let p = &self.plant;
        let mut out = String::new();
        let mut push = |key: &str, value: fmt::Arguments| {
            out.push_str(key);
            out.push('=');
            out.push_str(&value.to_string());
            out.push('\n');
        };
        push("target_count", format_args!("{}", g.target_count));
        push("initial_count", format_args!("{}", g.initial_count));
        push("densify_from", format_args!("{}", g.densify_from));
        push("densify_until", format_args!("{}", g.densify_until));
        push("cadence", format_args!("{}", g.cadence));
        push("tau_den_default", format_args!("{}", g.tau_den_default));
        push("tau_prune_default", format_args!("{}", g.tau_prune_default));
        push("tau_den_bounds", format_args!("{},{}", g.tau_den_bounds.0, g.tau_den_bounds.1));
        push("tau_prune_bounds", format_args!("{},{}", g.tau_prune_bounds.0, g.tau_prune_bounds.1));
        push("step_clamp", format_args!("{}", g.step_clamp));
        push("gain_den", format_args!("{}", g.gain_den));
        push("gain_prune", format_args!("{}", g.gain_prune));
        push("deadband_fraction", format_args!("{}", g.deadband_fraction));
        push("deadband_floor", format_args!("{}", g.deadband_floor));
        push("quota_floor_fraction", format_args!("{}", g.quota_floor_fraction));
        push("endgame_window", format_args!("{}", g.endgame_window));
        let schedule: Vec<String> = g.reset_schedule.iter().map(|t| t.to_string()).collect();
        push("reset_schedule", format_args!("{}", schedule.join(",")));
        push("lockout_duration", format_args!("{}", g.lockout_duration));
        push("plant.grad_log_mean", format_args!("{}", p.grad_log_mean));
        push("plant.grad_log_sd", format_args!("{}", p.grad_log_sd));
        push("plant.grad_scale_decay", format_args!("{}", p.grad_scale_decay));
        push("plant.drift_rate", format_args!("{}", p.drift_rate));
        push("plant.decay_probability", format_args!("{}", p.decay_probability));
        push("plant.decay_factor", format_args!("{}", p.decay_factor));
        push("plant.reset_value", format_args!("{}", p.reset_value));
        out
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::new(key, format!("cannot parse `{value}` as a number")))
}

fn parse_pair(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| ConfigError::new(key, "expected two comma-separated numbers"))?;
    Ok((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<u64>, ConfigError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|item| parse_num(key, item.trim())).collect()
}
