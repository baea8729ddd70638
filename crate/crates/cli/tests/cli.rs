//! Black-box checks of the `tpc` binary: flag contract, output layout, and
//! byte-stable artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL_CONFIG: &str = "\
target_count=4000
initial_count=2000
densify_from=500
densify_until=1500
cadence=100
reset_schedule=800
lockout_duration=200
";

fn tpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tpc")).args(args).output().expect("spawn tpc")
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "exit {:?}, stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

fn assert_failure_mentions(output: &Output, needle: &str) {
    assert!(!output.status.success(), "expected a failure mentioning `{needle}`");
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(needle), "stderr does not mention `{needle}`: {stderr}");
}

#[test]
fn run_writes_config_csv_and_metrics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seed",
        "7",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);

    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("target_count=4000"));
    let csv = fs::read_to_string(out.join("tpc_seed7.csv")).unwrap();
    assert!(csv.starts_with("t,N_before,N_after,N_star,"));
    assert_eq!(csv.lines().count(), 1 + 11, "header plus one row per actuation");
    let metrics = fs::read_to_string(out.join("tpc_seed7.metrics.txt")).unwrap();
    assert!(metrics.starts_with("regime: tpc\nseed: 7\n"), "{metrics}");
}

#[test]
fn seed_range_runs_each_seed() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "uncontrolled",
        "--seeds",
        "3..6",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);
    for seed in 3..6 {
        assert!(out.join(format!("uncontrolled_seed{seed}.csv")).exists());
        assert!(out.join(format!("uncontrolled_seed{seed}.metrics.txt")).exists());
    }
    assert!(!out.join("uncontrolled_seed6.csv").exists(), "range end is exclusive");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let result = tpc(&[
            "run",
            "--config",
            path_str(&cfg),
            "--regime",
            "tpc",
            "--seed",
            "1",
            "--out",
            path_str(out),
        ]);
        assert_success(&result);
    }
    for name in ["config.txt", "tpc_seed1.csv", "tpc_seed1.metrics.txt"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn plot_data_emits_two_column_series() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seed",
        "0",
        "--out",
        path_str(&out),
        "--plot-data",
    ]);
    assert_success(&result);

    let counts = fs::read_to_string(out.join("tpc_seed0.counts.dat")).unwrap();
    let target = fs::read_to_string(out.join("tpc_seed0.target.dat")).unwrap();
    for series in [&counts, &target] {
        assert_eq!(series.lines().count(), 11);
        for line in series.lines() {
            let fields: Vec<&str> = line.split(' ').collect();
            assert_eq!(fields.len(), 2, "not two columns: {line}");
            fields.iter().for_each(|f| {
                f.parse::<u64>().unwrap();
            });
        }
    }
    assert!(counts.starts_with("500 "));
    assert!(target.ends_with("1500 4000\n"), "schedule ends on the target");
}

#[test]
fn target_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--target",
        "3000",
        "--out",
        path_str(&out),
    ]);
    assert_success(&result);
    let config = fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(config.contains("target_count=3000"), "{config}");
    let series = fs::read_to_string(out.join("tpc_seed0.csv")).unwrap();
    assert!(series.lines().last().unwrap().starts_with("1500,"), "{series}");
}

#[test]
fn cutoff_requires_budget() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result =
        tpc(&["run", "--config", path_str(&cfg), "--regime", "cutoff", "--out", path_str(&out)]);
    assert_failure_mentions(&result, "--budget");
}

#[test]
fn budget_rejected_outside_cutoff() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--budget",
        "4000",
        "--out",
        path_str(&out),
    ]);
    assert_failure_mentions(&result, "--budget only applies");
}

#[test]
fn seed_and_seeds_conflict() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seed",
        "1",
        "--seeds",
        "0..2",
        "--out",
        path_str(&out),
    ]);
    assert!(!result.status.success());
}

#[test]
fn empty_seed_range_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let out = tmp.path().join("out");
    let result = tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seeds",
        "5..5",
        "--out",
        path_str(&out),
    ]);
    assert_failure_mentions(&result, "empty");
}

#[test]
fn invalid_config_names_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "cadence=0\n").unwrap();
    let out = tmp.path().join("out");
    let result =
        tpc(&["run", "--config", path_str(&cfg), "--regime", "tpc", "--out", path_str(&out)]);
    assert_failure_mentions(&result, "cadence");
}

#[test]
fn compare_aggregates_matching_directories() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let (tpc_dir, cut_dir, report_dir) =
        (tmp.path().join("t"), tmp.path().join("c"), tmp.path().join("r"));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seeds",
        "0..3",
        "--out",
        path_str(&tpc_dir),
    ]));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "cutoff",
        "--budget",
        "4000",
        "--seeds",
        "0..3",
        "--out",
        path_str(&cut_dir),
    ]));

    let result =
        tpc(&["compare", "--out", path_str(&report_dir), path_str(&tpc_dir), path_str(&cut_dir)]);
    assert_success(&result);
    let report = fs::read_to_string(report_dir.join("comparison.txt")).unwrap();
    assert!(report.starts_with("compliance_tolerance: 0.02\n"), "{report}");
    assert!(report.contains("[cutoff]\nruns: 3\n"), "{report}");
    assert!(report.contains("[tpc]\nruns: 3\n"), "{report}");
    assert_eq!(String::from_utf8_lossy(&result.stdout), report, "report echoed to stdout");
}

#[test]
fn compare_rejects_mismatched_configs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b, report_dir) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("r"));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--out",
        path_str(&a),
    ]));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--target",
        "3999",
        "--out",
        path_str(&b),
    ]));
    let result = tpc(&["compare", "--out", path_str(&report_dir), path_str(&a), path_str(&b)]);
    assert_failure_mentions(&result, "config mismatch");
}

#[test]
fn compare_rejects_mismatched_seed_sets() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path());
    let (a, b, report_dir) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("r"));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "tpc",
        "--seeds",
        "0..2",
        "--out",
        path_str(&a),
    ]));
    assert_success(&tpc(&[
        "run",
        "--config",
        path_str(&cfg),
        "--regime",
        "cutoff",
        "--budget",
        "4000",
        "--seeds",
        "1..3",
        "--out",
        path_str(&b),
    ]));
    let result = tpc(&["compare", "--out", path_str(&report_dir), path_str(&a), path_str(&b)]);
    assert_failure_mentions(&result, "seed set mismatch");
}

#[test]
fn compare_requires_run_directories() {
    let tmp = TempDir::new().unwrap();
    let report_dir = tmp.path().join("r");
    let result = tpc(&["compare", "--out", path_str(&report_dir)]);
    assert!(!result.status.success());

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let result = tpc(&["compare", "--out", path_str(&report_dir), path_str(&empty)]);
    assert_failure_mentions(&result, "config.txt");
}
