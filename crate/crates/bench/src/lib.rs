//! Shared fixtures for the benchmarks.

use pinch_core::admm::{self, AdmmSettings, AdmmState};
use pinch_core::config::ScenarioConfig;
use pinch_core::Scenario;

/// Drop `drop` of the default configuration.
pub fn default_scenario(drop: u64) -> Scenario {
    ScenarioConfig::default()
        .drop_scenario(drop)
        .expect("default configuration is valid")
}

/// ADMM iterate after `sweeps` sweeps, with a non-trivial beamformer and duals.
pub fn warmed_state(scenario: &Scenario, settings: &AdmmSettings, sweeps: usize) -> AdmmState {
    let mut st = admm::init_state(scenario, settings).expect("default scenario is valid");
    for _ in 0..sweeps {
        admm::sweep(&mut st, scenario, settings);
        admm::update_duals(&mut st, scenario);
    }
    st
}
