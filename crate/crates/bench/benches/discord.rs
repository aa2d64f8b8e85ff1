use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mdiscord::optimizer::grid_scan;
use mdiscord::oracle::oracle_objective;
use mdiscord::{discord, states, Objective, OptimizerConfig};
use mdiscord_bench::{angles, werner_ghz, werner_w};

fn objective(c: &mut Criterion) {
    let s = werner_w(0.8);
    let fast = Objective::standard(&s, 2).unwrap();
    let x = angles(2);
    let mut g = c.benchmark_group("objective_tripartite");
    g.bench_function("fast", |b| b.iter(|| fast.eval_angles(black_box(&x))));
    g.bench_function("reference", |b| {
        b.iter(|| oracle_objective(&s, 2, black_box(&x)).unwrap())
    });
    g.finish();

    let s4 = states::ghz(4).unwrap();
    let fast4 = Objective::standard(&s4, 3).unwrap();
    let x4 = angles(3);
    c.bench_function("objective_npartite_4", |b| b.iter(|| fast4.eval_angles(black_box(&x4))));
}

fn grid(c: &mut Criterion) {
    let s = werner_ghz(0.6);
    let obj = Objective::standard(&s, 2).unwrap();
    let f = |x: &[f64]| obj.eval_angles(x);
    let cfg = OptimizerConfig {
        grid_points_per_angle: 4,
        ..OptimizerConfig::default()
    };
    c.bench_function("grid_scan_tripartite_4", |b| {
        b.iter(|| grid_scan(&f, 2, &cfg, 4).unwrap())
    });
}

fn full(c: &mut Criterion) {
    let mut g = c.benchmark_group("discord");
    g.sample_size(10);
    let cfg = OptimizerConfig::default();
    let ghz = states::ghz(3).unwrap();
    g.bench_function("ghz", |b| b.iter(|| discord(&ghz, &[0, 1, 2], 3, &cfg).unwrap()));
    let w = werner_w(0.9);
    g.bench_function("werner_w", |b| b.iter(|| discord(&w, &[0, 1, 2], 3, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, objective, grid, full);
criterion_main!(benches);
