//! Cross-module checks on small scenarios.

use approx::assert_relative_eq;
use pinch_core::baselines::{mimo_power_min, ArrayGeometry};
use pinch_core::beamforming::{min_power_beamformer, min_power_for_channels};
use pinch_core::config::{Algorithm, Placement, ScenarioConfig};
use pinch_core::experiment::{self, Axis, RunOutcome, AUDIT_TOL};
use pinch_core::oracles::{duality_beamformer, grid_oracle_1d};
use pinch_core::{
    admm, audit_feasibility, bcd, dbm_to_watts, effective_channels, watts_to_dbm, AntennaState,
};

fn small_config() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.geometry.waveguides = 2;
    cfg.geometry.antennas_per_waveguide = 2;
    cfg.geometry.waveguide_y = vec![-10.0, 10.0];
    cfg.geometry.initial_positions = vec![14.0, 26.0];
    cfg.users.count = 2;
    cfg.drops = 2;
    cfg
}

#[test]
fn dbm_conversion_points() {
    assert_relative_eq!(watts_to_dbm(1e-3), 0.0, epsilon = 1e-12);
    assert_relative_eq!(watts_to_dbm(1.0), 30.0, epsilon = 1e-12);
    assert_relative_eq!(dbm_to_watts(watts_to_dbm(0.37)), 0.37, max_relative = 1e-12);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = small_config();
    let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(back, cfg);
    assert!(ScenarioConfig::from_toml_str("no_such_key = 1\n").is_err());
}

#[test]
fn drops_depend_only_on_seed_and_index() {
    let cfg = small_config();
    assert_eq!(cfg.drop_positions(1), cfg.drop_positions(1));
    assert_ne!(cfg.drop_positions(0), cfg.drop_positions(1));
    let other = ScenarioConfig {
        seed: 9,
        ..cfg.clone()
    };
    assert_ne!(cfg.drop_positions(0), other.drop_positions(0));
    let side = 40.0 * cfg.area_scale;
    for u in cfg.drop_positions(3) {
        assert!((0.0..=side).contains(&u[0]) && u[1].abs() <= side / 2.0);
    }
}

#[test]
fn conic_beamformer_matches_uplink_downlink_duality() {
    let cfg = small_config();
    let sc = cfg.drop_scenario(0).unwrap();
    let state = AntennaState::equal_split(&sc.motion);
    let channels = effective_channels(&sc.geometry, &state.positions, &sc.users);
    let conic = min_power_for_channels(
        &channels,
        &state.ratios,
        &sc.users.noise_power,
        &sc.users.sinr_target,
        1e-10,
    )
    .unwrap();
    let combined: Vec<_> = channels
        .iter()
        .map(|t| pinch_core::combined_channel(t, &state.ratios))
        .collect();
    let dual = duality_beamformer(&combined, &sc.users.noise_power, &sc.users.sinr_target).unwrap();
    assert_relative_eq!(conic.power(), dual.power(), max_relative = 1e-5);
}

#[test]
fn mimo_baseline_is_the_plain_beamformer_on_fixed_channels() {
    let cfg = small_config();
    let sc = cfg.drop_scenario(1).unwrap();
    let array = ArrayGeometry::line(2, 0.00535, [0.0, 0.0], 5.0, 28e9);
    let out = mimo_power_min(&sc.users, &array, &sc.motion, 1e-10);
    let direct = min_power_beamformer(
        &array.channels(&sc.users),
        &sc.users.noise_power,
        &sc.users.sinr_target,
        1e-10,
    )
    .unwrap();
    assert_relative_eq!(out.transmit_power_w, direct.power(), max_relative = 1e-6);
    assert!(out.is_feasible(AUDIT_TOL));
}

#[test]
fn continuous_design_is_feasible_and_beats_the_fixed_layout() {
    let cfg = small_config();
    let sc = cfg.drop_scenario(0).unwrap();
    let report = admm::run(&sc, &cfg.admm).unwrap();
    assert!(report.is_feasible(AUDIT_TOL));
    assert!(audit_feasibility(&report.state, &report.beamformer, &sc).is_feasible(AUDIT_TOL));

    let start = AntennaState::equal_split(&sc.motion);
    let channels = effective_channels(&sc.geometry, &start.positions, &sc.users);
    let fixed = min_power_for_channels(
        &channels,
        &start.ratios,
        &sc.users.noise_power,
        &sc.users.sinr_target,
        1e-10,
    )
    .unwrap();
    assert!(report.average_power_w <= sc.motion.transmit_weight() * fixed.power() * (1.0 + 1e-9));
}

#[test]
fn discrete_design_uses_grid_positions() {
    let mut cfg = small_config();
    cfg.discrete.candidates = 3;
    let sc = cfg.drop_scenario(0).unwrap();
    let report = bcd::run_discrete(&sc, &cfg.discrete).unwrap();
    assert!(report.is_feasible(AUDIT_TOL));
    let grid = bcd::DiscreteGrid::build(&sc, 3);
    for i in 0..grid.num_pas() {
        let x = report.state.positions[(i / 2, i % 2)];
        assert!(grid.positions[i].iter().any(|&c| (c - x).abs() < 1e-12));
    }
}

#[test]
fn single_pa_design_is_close_to_the_grid_oracle() {
    let cfg = experiment::tiny_continuous_config(11, 3);
    let sc = cfg.drop_scenario(0).unwrap();
    let report = admm::run(&sc, &cfg.admm).unwrap();
    let oracle = grid_oracle_1d(&sc, 1e-4);
    assert!(report.is_feasible(AUDIT_TOL));
    assert!(report.average_power_w <= 1.05 * oracle.average_power);
    // The oracle scans a grid, so it can be slightly worse than the optimizer.
    assert!(report.average_power_w >= 0.999 * oracle.average_power);
}

#[test]
fn sweeps_are_deterministic_and_tables_match_records() {
    let mut cfg = small_config();
    cfg.users.placement = Placement::Uniform;
    cfg.algorithms = vec![Algorithm::Continuous, Algorithm::ConventionalMimo];
    let a = experiment::sweep(&cfg, Axis::Sinr, &[5.0, 10.0]).unwrap();
    let b = experiment::sweep(&cfg, Axis::Sinr, &[5.0, 10.0]).unwrap();
    assert_eq!(experiment::runs_csv(&a.rows), experiment::runs_csv(&b.rows));
    assert_eq!(
        experiment::records_toml(&a.records),
        experiment::records_toml(&b.records)
    );
    assert_eq!(a.rows.len(), 2 * 2 * 2);
    for (row, rec) in a.rows.iter().zip(&a.records) {
        assert_eq!(row.average_power_w, rec.average_power_w);
        if rec.design.is_some() {
            let audit = experiment::audit_record(&cfg, rec).unwrap();
            assert_eq!(audit.is_feasible(AUDIT_TOL), rec.feasible);
        }
    }
    // A stricter target costs power.
    let mean = |v: f64| {
        experiment::summarize(&a.rows)
            .into_iter()
            .find(|s| s.value == Some(v) && s.algorithm == Algorithm::Continuous)
            .and_then(|s| s.mean_power_w)
            .unwrap()
    };
    assert!(mean(10.0) > mean(5.0));
}

#[test]
fn unreachable_targets_are_reported_not_hidden() {
    let mut cfg = small_config();
    cfg.users.count = 3;
    // Three users and two RF chains cannot all reach a huge SINR.
    let cfg = Axis::Sinr.apply(&cfg, 80.0).unwrap();
    let sc = cfg.drop_scenario(0).unwrap();
    let out = experiment::run_algorithm(&cfg, Algorithm::ConventionalMimo, &sc);
    assert!(!out.is_feasible());
    assert!(matches!(out, RunOutcome::Mimo(_)));
    let rows = experiment::run_drop(
        &ScenarioConfig {
            algorithms: vec![Algorithm::ConventionalMimo],
            ..cfg
        },
        0,
    )
    .unwrap()
    .rows;
    let csv = experiment::runs_csv(&rows);
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[4], "qos-infeasible");
    assert_eq!(fields[5], "false");
    // No design, so every power column is blank rather than a sentinel.
    assert!(fields[7..].iter().all(|f| f.is_empty()));
}
