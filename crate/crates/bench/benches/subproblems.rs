use criterion::{criterion_group, criterion_main, Criterion};
use pinch_bench::{default_scenario, warmed_state};
use pinch_core::admm::{self, AdmmSettings};
use pinch_core::bcd::{self, BcdSettings, DiscreteGrid};
use std::hint::black_box;

fn continuous_blocks(c: &mut Criterion) {
    let scenario = default_scenario(0);
    let settings = AdmmSettings::default();
    let state = warmed_state(&scenario, &settings, 3);
    let mut g = c.benchmark_group("admm");
    g.bench_function("beamformer", |b| {
        b.iter(|| admm::update_beamformer(black_box(&state), &scenario, 1e-8))
    });
    g.bench_function("proxy", |b| {
        b.iter(|| admm::update_t(black_box(&state), &scenario, &settings))
    });
    g.bench_function("theta", |b| {
        b.iter(|| admm::update_theta(black_box(&state), &scenario))
    });
    g.bench_function("positions", |b| {
        b.iter(|| admm::update_positions(black_box(&state), &scenario, &settings))
    });
    g.bench_function("sweep", |b| {
        b.iter_batched(
            || state.clone(),
            |mut st| admm::sweep(&mut st, &scenario, &settings),
            criterion::BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn discrete_blocks(c: &mut Criterion) {
    let scenario = default_scenario(0);
    let grid = DiscreteGrid::build(&scenario, 3);
    let ratios = scenario.motion.initial_positions.map(|_| 0.5);
    let z: Vec<Vec<f64>> = (0..grid.num_pas()).map(|_| vec![1.0 / 3.0; 3]).collect();
    let mut g = c.benchmark_group("bcd");
    g.sample_size(10);
    g.bench_function("w_z_lmi", |b| {
        b.iter(|| bcd::update_w_z(&scenario, &grid, black_box(&ratios), &z, 1.0, None, 1e-8))
    });
    g.finish();
}

fn full_runs(c: &mut Criterion) {
    let scenario = default_scenario(0);
    let mut g = c.benchmark_group("full");
    g.sample_size(10);
    g.bench_function("continuous", |b| {
        b.iter(|| admm::run(black_box(&scenario), &AdmmSettings::default()))
    });
    let settings = BcdSettings {
        candidates: 3,
        ..BcdSettings::default()
    };
    g.bench_function("discrete_3", |b| {
        b.iter(|| bcd::run_discrete(black_box(&scenario), &settings))
    });
    g.finish();
}

criterion_group!(benches, continuous_blocks, discrete_blocks, full_runs);
criterion_main!(benches);
