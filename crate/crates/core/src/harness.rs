//! Run harness: wires config, governor, and plant into complete runs of the
//! three regimes, logs one record per actuation, and aggregates comparison
//! metrics into machine-readable reports.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::config::{Config, ConfigError, GovernorConfig, RegimeSpec};
use crate::governor::{Branch, GovernorError, GovernorState};
use crate::plant::SimPlant;
use crate::trajectory::TargetSchedule;

/// Final-error tolerance a capacity-controlled run must meet to count as
/// compliant in a comparison report.
pub const COMPLIANCE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Governor(#[from] GovernorError),
}

/// One logged actuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuationRecord {
    pub t: u64,
    pub n_before: u64,
    pub n_after: u64,
    pub n_star: u64,
    pub gap: i64,
    pub quota: i64,
    pub delta: i64,
    pub tau_den_eff: f64,
    pub tau_prune_eff: f64,
    pub branch: Branch,
    pub reset_active: bool,
}

/// Summary statistics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub final_count: u64,
    /// |N(last actuation) − K| / K.
    pub final_error_fraction: f64,
    /// RMSE of (N − N*)/K after the 10th actuation, lockout windows excluded.
    pub tracking_rmse_fraction: f64,
    /// Largest positive (N − N*)/K over all actuations.
    pub max_overshoot_fraction: f64,
    /// First iteration whose command froze the cap, if any.
    pub saturation_iteration: Option<u64>,
    pub actuation_count: u64,
}

/// Everything a run produces: the actuation log, its summary metrics, and
/// the governor's persisted thresholds after each actuation (the audit trail
/// for the bounded-step contract, which the effective columns alone cannot
/// reconstruct).
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<ActuationRecord>,
    pub metrics: RunMetrics,
    pub persisted_thresholds: Vec<(f64, f64)>,
}

/// Simulates one full run. Per actuation: one plant interval, then any due
/// opacity resets (clamp plus governor notification, so the next command is
/// the first to know), then the regime's command, then densify, then prune.
/// The trajectory is a pure function of (config, regime, seed).
pub fn run(cfg: &Config, regime: &RegimeSpec, seed: u64) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    regime.validate()?;
    let gov_cfg = &cfg.governor;
    let schedule = TargetSchedule::from_config(gov_cfg);
    let mut plant = SimPlant::new(seed, gov_cfg.initial_count, &cfg.plant)?;
    let mut gov = GovernorState::new(gov_cfg);
    let mut records = Vec::new();
    let mut persisted = Vec::new();
    let mut resets = gov_cfg.reset_schedule.iter().copied().peekable();
    let mut last_reset = None;
    let mut prev_count: Option<u64> = None;

    for t in gov_cfg.actuation_iters() {
        plant.step_interval();
        while resets.peek().is_some_and(|&r| r <= t) {
            let r = resets.next().expect("peeked");
            plant.reset_opacity();
            gov.notify_reset(r, gov_cfg);
            last_reset = Some(r);
        }
        let n_before = plant.count();
        let cmd = gov.command(regime, t, n_before, gov_cfg)?;
        let added = plant.densify(cmd.tau_den_eff);
        let removed = plant.prune(cmd.tau_prune_eff);
        let n_after = plant.count();
        debug_assert_eq!(n_after as i64, n_before as i64 + added as i64 - removed as i64);
        let delta = prev_count.map_or(0, |prev| n_before as i64 - prev as i64);
        prev_count = Some(n_before);
        records.push(ActuationRecord {
            t,
            n_before,
            n_after,
            n_star: schedule.target_count(t),
            gap: cmd.gap,
            quota: cmd.quota,
            delta,
            tau_den_eff: cmd.tau_den_eff,
            tau_prune_eff: cmd.tau_prune_eff,
            branch: cmd.branch,
            reset_active: last_reset.is_some_and(|r| t < r + gov_cfg.lockout_duration),
        });
        persisted.push((gov.tau_den(), gov.tau_prune()));
    }

    let metrics = compute_metrics(&records, gov_cfg);
    Ok(RunOutput { records, metrics, persisted_thresholds: persisted })
}

pub fn compute_metrics(records: &[ActuationRecord], cfg: &GovernorConfig) -> RunMetrics {
    let k = cfg.target_count as f64;
    let final_count = records.last().map_or(cfg.initial_count, |r| r.n_after);
    let mut sum_sq = 0.0;
    let mut samples = 0u64;
    let mut max_overshoot = 0.0_f64;
    let mut saturation_iteration = None;
    for (i, rec) in records.iter().enumerate() {
        let err = (rec.n_after as f64 - rec.n_star as f64) / k;
        max_overshoot = max_overshoot.max(err);
        if i >= 10 && !rec.reset_active {
            sum_sq += err * err;
            samples += 1;
        }
        if saturation_iteration.is_none() && rec.branch == Branch::CapFrozen {
            saturation_iteration = Some(rec.t);
        }
    }
    RunMetrics {
        final_count,
        final_error_fraction: (final_count as f64 - k).abs() / k,
        tracking_rmse_fraction: if samples > 0 { (sum_sq / samples as f64).sqrt() } else { 0.0 },
        max_overshoot_fraction: max_overshoot,
        saturation_iteration,
        actuation_count: records.len() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    fn new(line: usize, reason: impl Into<String>) -> ParseError {
        ParseError { line, reason: reason.into() }
    }
}

pub const CSV_HEADER: &str =
    "t,N_before,N_after,N_star,gap,quota,delta,tau_den_eff,tau_prune_eff,branch,reset_active";

pub fn csv_string(records: &[ActuationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.n_before,
            r.n_after,
            r.n_star,
            r.gap,
            r.quota,
            r.delta,
            r.tau_den_eff,
            r.tau_prune_eff,
            r.branch.token(),
            r.reset_active
        )
        .expect("write to string");
    }
    out
}

pub fn write_csv(path: &Path, records: &[ActuationRecord]) -> io::Result<()> {
    fs::write(path, csv_string(records))
}

pub fn parse_csv(text: &str) -> Result<Vec<ActuationRecord>, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => return Err(ParseError::new(1, format!("unexpected header `{other}`"))),
        None => return Err(ParseError::new(1, "empty input")),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(ParseError::new(
                line_no,
                format!("expected 11 fields, found {}", fields.len()),
            ));
        }
        let branch = Branch::from_token(fields[9])
            .ok_or_else(|| ParseError::new(line_no, format!("unknown branch `{}`", fields[9])))?;
        let reset_active = match fields[10] {
            "true" => true,
            "false" => false,
            other => return Err(ParseError::new(line_no, format!("bad reset flag `{other}`"))),
        };
        records.push(ActuationRecord {
            t: parse_field(fields[0], "t", line_no)?,
            n_before: parse_field(fields[1], "N_before", line_no)?,
            n_after: parse_field(fields[2], "N_after", line_no)?,
            n_star: parse_field(fields[3], "N_star", line_no)?,
            gap: parse_field(fields[4], "gap", line_no)?,
            quota: parse_field(fields[5], "quota", line_no)?,
            delta: parse_field(fields[6], "delta", line_no)?,
            tau_den_eff: parse_field(fields[7], "tau_den_eff", line_no)?,
            tau_prune_eff: parse_field(fields[8], "tau_prune_eff", line_no)?,
            branch,
            reset_active,
        });
    }
    Ok(records)
}

fn parse_field<T: std::str::FromStr>(raw: &str, name: &str, line: usize) -> Result<T, ParseError> {
    raw.parse().map_err(|_| ParseError::new(line, format!("bad {name} value `{raw}`")))
}

/// Per-run metrics as a stable key-value document.
pub fn metrics_string(regime: &RegimeSpec, seed: u64, m: &RunMetrics) -> String {
    let mut out = String::new();
    writeln!(out, "regime: {}", regime.name()).expect("write to string");
    if let RegimeSpec::HardCutoff { budget } = regime {
        writeln!(out, "budget: {budget}").expect("write to string");
    }
    writeln!(out, "seed: {seed}").expect("write to string");
    writeln!(out, "final_count: {}", m.final_count).expect("write to string");
    writeln!(out, "final_error_fraction: {}", m.final_error_fraction).expect("write to string");
    writeln!(out, "tracking_rmse_fraction: {}", m.tracking_rmse_fraction).expect("write to string");
    writeln!(out, "max_overshoot_fraction: {}", m.max_overshoot_fraction).expect("write to string");
    match m.saturation_iteration {
        Some(t) => writeln!(out, "saturation_iteration: {t}"),
        None => writeln!(out, "saturation_iteration: none"),
    }
    .expect("write to string");
    writeln!(out, "actuation_count: {}", m.actuation_count).expect("write to string");
    out
}

pub fn parse_metrics(text: &str) -> Result<(RegimeSpec, u64, RunMetrics), ParseError> {
    let mut lines = text.lines().enumerate().peekable();
    let mut next_value = |key: &str| -> Result<(usize, String), ParseError> {
        let (idx, line) =
            lines.next().ok_or_else(|| ParseError::new(0, format!("missing `{key}` line")))?;
        let line_no = idx + 1;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(": "))
            .ok_or_else(|| ParseError::new(line_no, format!("expected `{key}: ...`")))?;
        Ok((line_no, value.to_string()))
    };

    let (regime_line, regime_name) = next_value("regime")?;
    let regime = match regime_name.as_str() {
        "uncontrolled" => RegimeSpec::Uncontrolled,
        "cutoff" => {
            let (line, raw) = next_value("budget")?;
            RegimeSpec::HardCutoff { budget: parse_field(&raw, "budget", line)? }
        }
        "tpc" => RegimeSpec::Tpc,
        other => return Err(ParseError::new(regime_line, format!("unknown regime `{other}`"))),
    };
    let (line, raw) = next_value("seed")?;
    let seed = parse_field(&raw, "seed", line)?;
    let (line, raw) = next_value("final_count")?;
    let final_count = parse_field(&raw, "final_count", line)?;
    let (line, raw) = next_value("final_error_fraction")?;
    let final_error_fraction = parse_field(&raw, "final_error_fraction", line)?;
    let (line, raw) = next_value("tracking_rmse_fraction")?;
    let tracking_rmse_fraction = parse_field(&raw, "tracking_rmse_fraction", line)?;
    let (line, raw) = next_value("max_overshoot_fraction")?;
    let max_overshoot_fraction = parse_field(&raw, "max_overshoot_fraction", line)?;
    let (line, raw) = next_value("saturation_iteration")?;
    let saturation_iteration =
        if raw == "none" { None } else { Some(parse_field(&raw, "saturation_iteration", line)?) };
    let (line, raw) = next_value("actuation_count")?;
    let actuation_count = parse_field(&raw, "actuation_count", line)?;

    Ok((
        regime,
        seed,
        RunMetrics {
            final_count,
            final_error_fraction,
            tracking_rmse_fraction,
            max_overshoot_fraction,
            saturation_iteration,
            actuation_count,
        },
    ))
}

/// One run's metrics plus the identity needed to aggregate it fairly.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareEntry {
    pub regime: RegimeSpec,
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Canonical serialization of the run's config; all compared runs must
    /// share it byte-for-byte.
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("no runs to compare")]
    Empty,
    #[error("config mismatch: {run} does not share the config of {reference}")]
    ConfigMismatch { run: String, reference: String },
    #[error("seed set mismatch: regime `{a}` and regime `{b}` ran different seeds")]
    SeedSetMismatch { a: String, b: String },
    #[error("actuation count mismatch: {run} logged {got} actuations, {reference} logged {want}")]
    ActuationCountMismatch { run: String, got: u64, reference: String, want: u64 },
}

/// Per-regime (mean, sample sd) aggregates of every run metric.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeAggregate {
    pub regime: String,
    pub runs: u64,
    pub final_count: (f64, f64),
    pub final_error_fraction: (f64, f64),
    pub tracking_rmse_fraction: (f64, f64),
    pub max_overshoot_fraction: (f64, f64),
    pub saturated_runs: u64,
    /// Aggregated over the runs that saturated, if any did.
    pub saturation_iteration: Option<(f64, f64)>,
    pub actuation_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub aggregates: Vec<RegimeAggregate>,
    /// True when every capacity-controlled run (cutoff or tpc) landed within
    /// [`COMPLIANCE_TOLERANCE`] of the target.
    pub capacity_compliant: bool,
}

fn entry_label(entry: &CompareEntry) -> String {
    format!("{} seed {}", entry.regime.name(), entry.seed)
}

pub fn compare(entries: &[CompareEntry]) -> Result<ComparisonReport, CompareError> {
    let reference = entries.first().ok_or(CompareError::Empty)?;
    for entry in entries {
        if entry.config_fingerprint != reference.config_fingerprint {
            return Err(CompareError::ConfigMismatch {
                run: entry_label(entry),
                reference: entry_label(reference),
            });
        }
        if entry.metrics.actuation_count != reference.metrics.actuation_count {
            return Err(CompareError::ActuationCountMismatch {
                run: entry_label(entry),
                got: entry.metrics.actuation_count,
                reference: entry_label(reference),
                want: reference.metrics.actuation_count,
            });
        }
    }

    let regime_names = ["uncontrolled", "cutoff", "tpc"];
    let groups: Vec<(&str, Vec<&CompareEntry>)> = regime_names
        .iter()
        .map(|name| {
            (*name, entries.iter().filter(|e| e.regime.name() == *name).collect::<Vec<_>>())
        })
        .filter(|(_, group)| !group.is_empty())
        .collect();

    let seed_set = |group: &[&CompareEntry]| {
        let mut seeds: Vec<u64> = group.iter().map(|e| e.seed).collect();
        seeds.sort_unstable();
        seeds
    };
    for pair in groups.windows(2) {
        if seed_set(&pair[0].1) != seed_set(&pair[1].1) {
            return Err(CompareError::SeedSetMismatch {
                a: pair[0].0.to_string(),
                b: pair[1].0.to_string(),
            });
        }
    }

    let aggregates = groups
        .iter()
        .map(|(name, group)| {
            let collect = |f: &dyn Fn(&RunMetrics) -> f64| {
                mean_sd(&group.iter().map(|e| f(&e.metrics)).collect::<Vec<_>>())
            };
            let saturations: Vec<f64> = group
                .iter()
                .filter_map(|e| e.metrics.saturation_iteration.map(|t| t as f64))
                .collect();
            RegimeAggregate {
                regime: name.to_string(),
                runs: group.len() as u64,
                final_count: collect(&|m| m.final_count as f64),
                final_error_fraction: collect(&|m| m.final_error_fraction),
                tracking_rmse_fraction: collect(&|m| m.tracking_rmse_fraction),
                max_overshoot_fraction: collect(&|m| m.max_overshoot_fraction),
                saturated_runs: saturations.len() as u64,
                saturation_iteration: if saturations.is_empty() {
                    None
                } else {
                    Some(mean_sd(&saturations))
                },
                actuation_count: group[0].metrics.actuation_count,
            }
        })
        .collect();

    let capacity_compliant = entries
        .iter()
        .filter(|e| !matches!(e.regime, RegimeSpec::Uncontrolled))
        .all(|e| e.metrics.final_error_fraction <= COMPLIANCE_TOLERANCE);

    Ok(ComparisonReport { aggregates, capacity_compliant })
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn report_string(report: &ComparisonReport) -> String {
    let mut out = String::new();
    writeln!(out, "compliance_tolerance: {COMPLIANCE_TOLERANCE}").expect("write to string");
    writeln!(out, "capacity_compliant: {}", report.capacity_compliant).expect("write to string");
    for agg in &report.aggregates {
        writeln!(out).expect("write to string");
        writeln!(out, "[{}]", agg.regime).expect("write to string");
        writeln!(out, "runs: {}", agg.runs).expect("write to string");
        let pair = |name: &str, (mean, sd): (f64, f64)| format!("{name}: mean {mean} sd {sd}");
        writeln!(out, "{}", pair("final_count", agg.final_count)).expect("write to string");
        writeln!(out, "{}", pair("final_error_fraction", agg.final_error_fraction))
            .expect("write to string");
        writeln!(out, "{}", pair("tracking_rmse_fraction", agg.tracking_rmse_fraction))
            .expect("write to string");
        writeln!(out, "{}", pair("max_overshoot_fraction", agg.max_overshoot_fraction))
            .expect("write to string");
        writeln!(out, "saturated_runs: {}", agg.saturated_runs).expect("write to string");
        match agg.saturation_iteration {
            Some(stats) => writeln!(out, "{}", pair("saturation_iteration", stats)),
            None => writeln!(out, "saturation_iteration: none"),
        }
        .expect("write to string");
        writeln!(out, "actuation_count: {}", agg.actuation_count).expect("write to string");
    }
    out
}

pub fn write_report(path: &Path, report: &ComparisonReport) -> io::Result<()> {
    fs::write(path, report_string(report))
}
