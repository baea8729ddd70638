//! The demo's JSON surface, kept free of wasm types so it runs (and is
//! tested) natively. Series are columnar arrays ready for canvas plotting.

use serde::Serialize;

use tpc_core::config::{Config, RegimeSpec};
use tpc_core::harness::{run, RunMetrics};
use tpc_core::trajectory::TargetSchedule;

#[derive(Serialize)]
struct Curve {
    t: Vec<u64>,
    n_star: Vec<u64>,
}

#[derive(Serialize)]
struct Run {
    regime: String,
    seed: u64,
    t: Vec<u64>,
    n_after: Vec<u64>,
    n_star: Vec<u64>,
    tau_den_eff: Vec<f64>,
    tau_prune_eff: Vec<f64>,
    branch: Vec<String>,
    reset_active: Vec<bool>,
    metrics: Metrics,
}

#[derive(Serialize)]
struct Metrics {
    final_count: u64,
    final_error_fraction: f64,
    tracking_rmse_fraction: f64,
    max_overshoot_fraction: f64,
    saturation_iteration: Option<u64>,
    actuation_count: u64,
}

impl From<&RunMetrics> for Metrics {
    fn from(m: &RunMetrics) -> Metrics {
        Metrics {
            final_count: m.final_count,
            final_error_fraction: m.final_error_fraction,
            tracking_rmse_fraction: m.tracking_rmse_fraction,
            max_overshoot_fraction: m.max_overshoot_fraction,
            saturation_iteration: m.saturation_iteration,
            actuation_count: m.actuation_count,
        }
    }
}

/// Canonical text of the default configuration, for seeding the editor.
pub fn default_config_text() -> String {
    Config::defaults().to_config_string()
}

/// The scheduled count at every actuation iteration, as JSON.
pub fn curve_json(config: &str) -> Result<String, String> {
    let cfg = parse_config(config)?;
    let schedule = TargetSchedule::from_config(&cfg.governor);
    let t: Vec<u64> = cfg.governor.actuation_iters().collect();
    let n_star = t.iter().map(|&t| schedule.target_count(t)).collect();
    Ok(serde_json::to_string(&Curve { t, n_star }).expect("serializable"))
}

/// One full run as JSON: per-actuation series plus summary metrics.
pub fn simulate_json(
    config: &str,
    regime: &str,
    budget: Option<u64>,
    seed: u64,
) -> Result<String, String> {
    let cfg = parse_config(config)?;
    let regime = match regime {
        "uncontrolled" => RegimeSpec::Uncontrolled,
        // Capacity-matched by default: an omitted budget means the target.
        "cutoff" => RegimeSpec::HardCutoff { budget: budget.unwrap_or(cfg.governor.target_count) },
        "tpc" => RegimeSpec::Tpc,
        other => return Err(format!("unknown regime `{other}`")),
    };
    let output = run(&cfg, &regime, seed).map_err(|e| e.to_string())?;
    let mut dto = Run {
        regime: regime.name().to_string(),
        seed,
        t: Vec::new(),
        n_after: Vec::new(),
        n_star: Vec::new(),
        tau_den_eff: Vec::new(),
        tau_prune_eff: Vec::new(),
        branch: Vec::new(),
        reset_active: Vec::new(),
        metrics: Metrics::from(&output.metrics),
    };
    for rec in &output.records {
        dto.t.push(rec.t);
        dto.n_after.push(rec.n_after);
        dto.n_star.push(rec.n_star);
        dto.tau_den_eff.push(rec.tau_den_eff);
        dto.tau_prune_eff.push(rec.tau_prune_eff);
        dto.branch.push(rec.branch.token().to_string());
        dto.reset_active.push(rec.reset_active);
    }
    Ok(serde_json::to_string(&dto).expect("serializable"))
}

fn parse_config(text: &str) -> Result<Config, String> {
    let cfg = Config::parse_str(text).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}
