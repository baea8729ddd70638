//! wasm-bindgen exports for the browser playground (`www/index.html`).
//!
//! Three operations, all JSON-string based so the page needs no generated
//! types: fetch the default config, preview a target schedule, and simulate
//! one run of a chosen regime. The logic lives in [`api`], which has no wasm
//! dependency and is tested natively.

pub mod api;

use wasm_bindgen::prelude::*;

/// Canonical default configuration in the flat `key=value` format.
#[wasm_bindgen]
pub fn default_config() -> String {
    api::default_config_text()
}

/// JSON `{t: [...], n_star: [...]}`: the scheduled count at each actuation.
#[wasm_bindgen]
pub fn target_curve(config: &str) -> Result<String, JsError> {
    api::curve_json(config).map_err(|e| JsError::new(&e))
}

/// JSON per-actuation series plus metrics for one `(config, regime, seed)`
/// run. `budget` applies to the cutoff regime only; omitted, it defaults to
/// the configured target count.
#[wasm_bindgen]
pub fn simulate(
    config: &str,
    regime: &str,
    budget: Option<u32>,
    seed: u32,
) -> Result<String, JsError> {
    api::simulate_json(config, regime, budget.map(u64::from), u64::from(seed))
        .map_err(|e| JsError::new(&e))
}
