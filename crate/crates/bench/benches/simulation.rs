use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use biphoton_core::chip::{BellPhaseConfig, BellSourceChip};
use biphoton_core::circuit::{compile_unitary, SplitterConvention};
use biphoton_core::counting::NoiseModel;
use biphoton_core::fitting::fit_fringe;
use biphoton_core::oracle::{random_state, random_unitary};
use biphoton_core::spectral::{SpectralEnvelope, SpectralShape};

fn bench_state_transform(c: &mut Criterion) {
    let chip = BellSourceChip::default();
    let state = random_state(std::sync::Arc::clone(chip.registry()), 7);
    let unitary = random_unitary(chip.registry().len(), 11);
    c.bench_function("apply_unitary_8_modes", |b| {
        b.iter(|| black_box(state.apply_unitary(black_box(&unitary)).unwrap()))
    });
}

fn bench_compile(c: &mut Criterion) {
    let chip = BellSourceChip::default();
    c.bench_function("compile_bench_graph", |b| {
        b.iter(|| black_box(compile_unitary(black_box(chip.graph())).unwrap()))
    });
}

fn bench_output_state(c: &mut Criterion) {
    let chip = BellSourceChip::new(SplitterConvention::Symmetric);
    let config = BellPhaseConfig::split_with_alpha(std::f64::consts::PI);
    c.bench_function("output_state", |b| {
        b.iter(|| black_box(chip.output_state(black_box(&config)).unwrap()))
    });
}

fn bench_bsm_probability(c: &mut Criterion) {
    let chip = BellSourceChip::default();
    let env = SpectralEnvelope::new(SpectralShape::Rectangular, 1552.5, 60.0).unwrap();
    let noise = NoiseModel::ideal();
    let config = BellPhaseConfig::split_with_alpha(1.1);
    c.bench_function("bsm_coincidence", |b| {
        b.iter(|| {
            black_box(
                chip.bsm_coincidence(black_box(&config), 4.2, &env, &noise)
                    .unwrap(),
            )
        })
    });
}

fn bench_quadrature(c: &mut Criterion) {
    let env = SpectralEnvelope::new(SpectralShape::Rectangular, 1552.5, 60.0).unwrap();
    c.bench_function("quadrature_overlap", |b| {
        b.iter(|| black_box(env.quadrature_overlap(black_box(12.5)).unwrap()))
    });
}

fn bench_fringe_fit(c: &mut Criterion) {
    let samples: Vec<(f64, f64)> = (0..201)
        .map(|i| {
            let x = 100.0 * i as f64 / 200.0;
            (x, 5000.0 * (1.0 + 0.9 * (0.09 * x + 1.26).cos()))
        })
        .collect();
    c.bench_function("fit_fringe_201_points", |b| {
        b.iter(|| black_box(fit_fringe(black_box(&samples)).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_state_transform,
    bench_compile,
    bench_output_state,
    bench_bsm_probability,
    bench_quadrature,
    bench_fringe_fit
);
criterion_main!(benches);
