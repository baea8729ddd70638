//! Closed-loop population control for adaptive splat-style primitive sets.
//!
//! The crate simulates a primitive population whose size is steered toward a
//! scheduled target by re-tuning densify/prune thresholds once per actuation,
//! and provides the baseline regimes (uncontrolled, hard cutoff) the
//! controller is usually compared against.

pub mod config;
pub mod governor;
pub mod harness;
pub mod plant;
pub mod trajectory;

pub use config::{Config, ConfigError, GovernorConfig, PlantConfig, RegimeSpec};
pub use governor::{
    actuations_left, compute_quota, deadband_width, Branch, GovernorError, GovernorState,
    ThresholdCommand,
};
pub use harness::{
    compare, compute_metrics, csv_string, metrics_string, parse_csv, parse_metrics, report_string,
    run, write_csv, write_report, ActuationRecord, CompareEntry, CompareError, ComparisonReport,
    HarnessError, ParseError, RegimeAggregate, RunMetrics, RunOutput, COMPLIANCE_TOLERANCE,
    CSV_HEADER,
};
pub use plant::{SimPlant, SimPrimitive};
pub use trajectory::{ease, TargetSchedule, TrajectoryError};
