//! Runs the three regimes on the default profile with one seed and prints
//! their summary metrics side by side.

use tpc_core::config::{Config, RegimeSpec};
use tpc_core::harness::{metrics_string, run};

fn main() {
    let cfg = Config::defaults();
    let budget = cfg.governor.target_count;
    let regimes = [RegimeSpec::Uncontrolled, RegimeSpec::HardCutoff { budget }, RegimeSpec::Tpc];
    for regime in regimes {
        let out = run(&cfg, &regime, 0).expect("default profile is valid");
        println!("{}", metrics_string(&regime, 0, &out.metrics));
    }
}
