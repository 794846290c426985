use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use povm_forge_core::detector::{assemble_click_weights, DetectorConfig};
use povm_forge_core::inverse::TargetGridOptions;
use povm_forge_core::{
    fourier_transform, gaussian_target, invert_to_drive, polynomial_drive, retrodict, Complex64,
    ComplexEnvelope, FourierSign, Grid, PolynomialDrive, PolynomialFamily,
};

fn bench_retrodict(c: &mut Criterion) {
    let mut group = c.benchmark_group("retrodict");
    for n in [1025usize, 4097, 16385] {
        let drive = polynomial_drive(
            &PolynomialDrive::standard(PolynomialFamily::TwoSided, 4, 1.0),
            n,
        )
        .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &drive, |b, d| {
            b.iter(|| retrodict(black_box(d)).unwrap())
        });
    }
    group.finish();
}

fn bench_invert(c: &mut Criterion) {
    let mut group = c.benchmark_group("invert_to_drive");
    for pps in [64usize, 256] {
        let options = TargetGridOptions {
            points_per_sigma: pps,
            half_span_sigmas: 8.0,
        };
        let target = gaussian_target(1.0, 0.0, 2.0, 3.0, &options).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(pps), &target, |b, t| {
            b.iter(|| invert_to_drive(black_box(t)).unwrap())
        });
    }
    group.finish();
}

fn bench_click_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_click_weights");
    for gain in [1u32, 10, 50] {
        let cfg = DetectorConfig {
            eta: 0.6,
            gain,
            nbar: 0.2,
            nbar_reflected: 0.02,
            k_min: 3,
            n_max: None,
            renormalized_posterior: false,
        };
        group.bench_with_input(BenchmarkId::from_parameter(gain), &cfg, |b, cfg| {
            b.iter(|| assemble_click_weights(black_box(cfg), 0.95, 0.2).unwrap())
        });
    }
    group.finish();
}

fn bench_fourier(c: &mut Criterion) {
    let mut group = c.benchmark_group("fourier_transform");
    for log2 in [12u32, 16] {
        let n = 1usize << log2;
        let grid = Grid::time(-10.0, 10.0, n).unwrap();
        let samples = grid
            .coords()
            .iter()
            .map(|&t| Complex64::from_polar((-t * t / 4.0).exp(), t))
            .collect();
        let f = ComplexEnvelope::new(grid, samples).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| fourier_transform(black_box(f), FourierSign::Positive, 4).unwrap())
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_retrodict,
    bench_invert,
    bench_click_weights,
    bench_fourier
);
criterion_main!(benches);
