use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ringtherm_core::evolve::{eigendecompose, propagate, FieldState};
use ringtherm_core::lattice::{build_hamiltonian, DisorderSpec, RingLattice};
use ringtherm_core::stats::bootstrap_g2;
use ringtherm_core::sweep::simulate_ensemble;
use ringtherm_core::{EnsembleParams, RandomStream};

fn ring(n: usize) -> ringtherm_core::Hamiltonian {
    let spec = DisorderSpec::new(0.5, 0.8).unwrap();
    build_hamiltonian(&RingLattice::sample(&spec, n, 0, &RandomStream::new(n as u64)).unwrap())
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("eigendecompose");
    for n in [4, 12, 30] {
        let h = ring(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| b.iter(|| eigendecompose(black_box(h))));
    }
    group.finish();

    let mut group = c.benchmark_group("propagate");
    for n in [4, 12, 30] {
        let h = ring(n);
        let psi = FieldState::single_site(n, 0);
        group.bench_with_input(BenchmarkId::from_parameter(n), &h, |b, h| {
            b.iter(|| propagate(black_box(h), &psi, 34.5))
        });
    }
    group.finish();
}

fn ensembles(c: &mut Criterion) {
    let params = EnsembleParams::default();
    c.bench_function("simulate_ensemble/n6x120", |b| {
        b.iter(|| simulate_ensemble(6, &params, 120, &RandomStream::new(black_box(1))))
    });
    let records = simulate_ensemble(4, &params, 120, &RandomStream::new(2)).unwrap();
    c.bench_function("bootstrap_g2/120x1000", |b| {
        b.iter(|| bootstrap_g2(black_box(&records), 120, 1000, &RandomStream::new(3)))
    });
}

criterion_group!(benches, spectral, ensembles);
criterion_main!(benches);
