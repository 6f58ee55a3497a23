use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lrchain::{
    analyze, build_full_space_hamiltonian, build_single_excitation_hamiltonian, eigendecompose, ChainSpec,
    PeakSearch, Propagator, DEFAULT_WINDOW_FACTOR,
};

fn eigendecomposition(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigendecompose");
    for n in [20usize, 50, 100] {
        let h = build_single_excitation_hamiltonian(&ChainSpec::new(n, 3.0).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| eigendecompose(black_box(h))));
    }
    group.finish();
}

fn propagator(c: &mut Criterion) {
    let spec = ChainSpec::double_hole(100, 3.0).unwrap();
    let sd = eigendecompose(&build_single_excitation_hamiltonian(&spec).unwrap()).unwrap();
    let prop = Propagator::new(&sd, 1, 100).unwrap();
    c.bench_function("probability/n100", |b| b.iter(|| prop.probability(black_box(1.7e6))));
}

fn transfer_event(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze");
    group.sample_size(10);
    for n in [50usize, 100] {
        let spec = ChainSpec::double_hole(n, 3.0).unwrap();
        group.bench_with_input(BenchmarkId::new("dh", n), &spec, |b, spec| {
            b.iter(|| analyze(black_box(spec), DEFAULT_WINDOW_FACTOR, &PeakSearch::default()))
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("full_space");
    group.sample_size(10);
    let spec = ChainSpec::new(10, 3.0).unwrap();
    group.bench_function("n10", |b| b.iter(|| build_full_space_hamiltonian(black_box(&spec))));
    group.finish();
}

criterion_group!(benches, eigendecomposition, propagator, transfer_event, oracle);
criterion_main!(benches);
