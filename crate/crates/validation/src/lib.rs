//! Helpers for the end-to-end acceptance suite in `tests/acceptance.rs`.
//!
//! Optimiser budgets are fixed by the callers (iterations, one restart,
//! master seed 0) so the whole suite fits a single core.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use exciton_cli::commands::{optimize_scenario, simulate, OptimizedRun, RunOptions};
use exciton_cli::presets::preset;
use exciton_cli::scenario::{Resolved, Scenario};
use exciton_core::model::{builtin_network, ModelConfig, NetworkKind};

/// Prints `criterion N: PASS|FAIL (detail)` straight to stdout, bypassing the
/// harness capture, then asserts the verdict.
pub fn verdict(n: u32, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

pub fn find(set: &[Scenario], name: &str) -> Scenario {
    set.iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no scenario named {name}"))
        .clone()
}

pub fn preset_scenario(set: &str, name: &str) -> Scenario {
    find(&preset(set).unwrap(), name)
}

/// Resolves with a single restart and the given Adam budget.
pub fn resolve(s: &Scenario, iterations: usize) -> Resolved {
    let options = RunOptions {
        iterations: Some(iterations),
        restarts: Some(1),
        ..RunOptions::default()
    };
    options.apply(s).resolve().unwrap()
}

pub fn optimized(set: &str, name: &str, iterations: usize) -> OptimizedRun {
    optimize_scenario(&resolve(&preset_scenario(set, name), iterations)).unwrap()
}

pub fn improvement(run: &OptimizedRun) -> f64 {
    run.result.best_objective / run.unoptimized_objective
}

/// Final-time sink population of the learned model over the unoptimized one.
pub fn late_sink_ratio(r: &Resolved, run: &OptimizedRun) -> f64 {
    let learned = *simulate(r, &run.learned).unwrap().p_sink().last().unwrap();
    let base = *simulate(r, &r.config).unwrap().p_sink().last().unwrap();
    learned / base
}

pub fn default_config(kind: NetworkKind, n: usize, omega_r: f64) -> ModelConfig {
    ModelConfig::new(builtin_network(kind, n).unwrap(), omega_r)
}

/// File name to contents for every file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect()
}
