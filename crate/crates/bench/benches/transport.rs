use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gnc_bench::{ribbon, solver, staircase};
use gnc_core::analysis::detect_plateaus;
use gnc_core::transport::{
    bias_map_from_source, conductance_from_source, curve_for_bias, lead_self_energy, GateModel, GreenOptions, LeadSide,
};
use std::hint::black_box;

fn lead_decimation(c: &mut Criterion) {
    let dev = ribbon(30.0, 20.0);
    let opts = GreenOptions::default();
    c.bench_function("lead_self_energy_30nm", |b| {
        b.iter(|| lead_self_energy(&dev.left_lead, LeadSide::Left, black_box(0.05), &opts).unwrap())
    });
}

fn transmission(c: &mut Criterion) {
    let mut group = c.benchmark_group("transmission");
    for len in [25.0, 50.0, 100.0] {
        let s = solver(&ribbon(30.0, len));
        group.bench_with_input(BenchmarkId::from_parameter(len), &s, |b, s| {
            b.iter(|| s.transmission(black_box(0.05)).unwrap())
        });
    }
    group.finish();
}

fn gate_sweep(c: &mut Criterion) {
    let dev = ribbon(30.0, 30.0);
    let s = solver(&dev);
    let model = GateModel::for_device(&dev, 8e-6, 0.0);
    let gates: Vec<f64> = (1..=32).map(|i| i as f64).collect();
    c.bench_function("gate_sweep_32", |b| b.iter(|| conductance_from_source(&s, &model, &gates, 0.0).unwrap()));
}

fn bias_map(c: &mut Criterion) {
    let dev = ribbon(30.0, 30.0);
    let model = GateModel::for_device(&dev, 8e-6, 0.0);
    let gates: Vec<f64> = (1..=100).map(|i| 0.5 * i as f64).collect();
    let biases: Vec<f64> = (0..=20).map(|i| 1e-3 * i as f64).collect();
    let curve = curve_for_bias(&solver(&dev), &model, &gates, &biases, 1e-3).unwrap();
    c.bench_function("bias_map_from_curve_100x21", |b| {
        b.iter(|| bias_map_from_source(&curve, &model, &gates, &biases).unwrap())
    });
}

fn plateaus(c: &mut Criterion) {
    let (v, g) = staircase(10_000);
    c.bench_function("detect_plateaus_10k", |b| b.iter(|| detect_plateaus(&v, &g, 0.05, 2.0).unwrap()));
}

criterion_group!(benches, lead_decimation, transmission, gate_sweep, bias_map, plateaus);
criterion_main!(benches);
