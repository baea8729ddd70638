//! Command-line front end: `tpc run` simulates one regime over one or more
//! seeds and writes per-run logs; `tpc compare` aggregates finished run
//! directories into a single report.

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tpc_core::config::{Config, RegimeSpec};
use tpc_core::harness::{self, CompareEntry, RunOutput};

#[derive(Parser)]
#[command(name = "tpc", version, about = "Target-point control for primitive populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one regime, writing a CSV log and metrics file per seed.
    Run(RunArgs),
    /// Aggregate run directories that share a config into one report.
    Compare(CompareArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (flat `key=value` lines).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Control regime to simulate.
    #[arg(long, value_enum)]
    regime: Regime,
    /// Cutoff budget; required by --regime cutoff, rejected otherwise.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
    /// Override the configured target count.
    #[arg(long, value_name = "N")]
    target: Option<u64>,
    /// Seed for a single run.
    #[arg(long, value_name = "N", conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Half-open seed range `A..B`; each seed runs independently.
    #[arg(long, value_name = "A..B")]
    seeds: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Additionally write two-column (t, N) and (t, N*) series per run.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Uncontrolled,
    Cutoff,
    Tpc,
}

#[derive(Args)]
struct CompareArgs {
    /// Directory for the comparison report, created if missing.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Run directories produced by `tpc run`.
    #[arg(value_name = "DIR", required = true)]
    dirs: Vec<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = Config::from_file(&args.config)?;
    if let Some(target) = args.target {
        cfg.governor.target_count = target;
    }
    let regime = resolve_regime(&args)?;
    let seeds = match (&args.seed, &args.seeds) {
        (Some(seed), None) => *seed..*seed + 1,
        (None, Some(raw)) => parse_seed_range(raw)?,
        (None, None) => 0..1,
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    fs::write(args.out.join("config.txt"), cfg.to_config_string())
        .with_context(|| format!("cannot write {}/config.txt", args.out.display()))?;

    for seed in seeds {
        let output = harness::run(&cfg, &regime, seed)?;
        let stem = format!("{}_seed{}", regime.name(), seed);
        let csv_path = args.out.join(format!("{stem}.csv"));
        harness::write_csv(&csv_path, &output.records)
            .with_context(|| format!("cannot write {}", csv_path.display()))?;
        let metrics_path = args.out.join(format!("{stem}.metrics.txt"));
        fs::write(&metrics_path, harness::metrics_string(&regime, seed, &output.metrics))
            .with_context(|| format!("cannot write {}", metrics_path.display()))?;
        if args.plot_data {
            write_plot_data(&args.out, &stem, &output)?;
        }
        println!(
            "{stem}: final_count {} final_error_fraction {}",
            output.metrics.final_count, output.metrics.final_error_fraction
        );
    }
    Ok(())
}

fn resolve_regime(args: &RunArgs) -> Result<RegimeSpec> {
    let regime = match (args.regime, args.budget) {
        (Regime::Cutoff, Some(budget)) => RegimeSpec::HardCutoff { budget },
        (Regime::Cutoff, None) => bail!("--regime cutoff requires --budget"),
        (_, Some(_)) => bail!("--budget only applies to --regime cutoff"),
        (Regime::Uncontrolled, None) => RegimeSpec::Uncontrolled,
        (Regime::Tpc, None) => RegimeSpec::Tpc,
    };
    regime.validate()?;
    Ok(regime)
}

fn parse_seed_range(raw: &str) -> Result<Range<u64>> {
    let (a, b) =
        raw.split_once("..").with_context(|| format!("--seeds expects `A..B`, got `{raw}`"))?;
    let a: u64 =
        a.trim().parse().with_context(|| format!("--seeds start `{a}` is not an integer"))?;
    let b: u64 =
        b.trim().parse().with_context(|| format!("--seeds end `{b}` is not an integer"))?;
    if a >= b {
        bail!("--seeds range `{raw}` is empty");
    }
    Ok(a..b)
}

/// Gnuplot-style series: `<stem>.counts.dat` holds (t, N_after) and
/// `<stem>.target.dat` holds (t, N*).
fn write_plot_data(dir: &Path, stem: &str, output: &RunOutput) -> Result<()> {
    let mut counts = String::new();
    let mut target = String::new();
    for rec in &output.records {
        counts.push_str(&format!("{} {}\n", rec.t, rec.n_after));
        target.push_str(&format!("{} {}\n", rec.t, rec.n_star));
    }
    for (suffix, body) in [("counts", counts), ("target", target)] {
        let path = dir.join(format!("{stem}.{suffix}.dat"));
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let mut entries = Vec::new();
    for dir in &args.dirs {
        let fingerprint = fs::read_to_string(dir.join("config.txt"))
            .with_context(|| format!("{}: cannot read config.txt", dir.display()))?;
        let mut metric_files: Vec<PathBuf> = fs::read_dir(dir)
            .with_context(|| format!("{}: cannot list directory", dir.display()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|path| {
                path.file_name()
                    .and_then(|name| name.to_str())
                    .is_some_and(|name| name.ends_with(".metrics.txt"))
            })
            .collect();
        metric_files.sort();
        if metric_files.is_empty() {
            bail!("{}: no .metrics.txt files to compare", dir.display());
        }
        for path in metric_files {
            let text = fs::read_to_string(&path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let (regime, seed, metrics) = harness::parse_metrics(&text)
                .with_context(|| format!("{}: malformed metrics file", path.display()))?;
            entries.push(CompareEntry {
                regime,
                seed,
                metrics,
                config_fingerprint: fingerprint.clone(),
            });
        }
    }

    let report = harness::compare(&entries)?;
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    let path = args.out.join("comparison.txt");
    harness::write_report(&path, &report)
        .with_context(|| format!("cannot write {}", path.display()))?;
    print!("{}", harness::report_string(&report));
    Ok(())
}
