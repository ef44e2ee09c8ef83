use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sqg_bench::random_field;
use sqg_core::fractional::{
    dirichlet_d, heat_kernel_at_distance, lambda_power, lambda_semigroup, lambda_singular,
    SemigroupQuadrature, SingularKernel,
};
use sqg_core::{SpectralField, UnitVector};

fn fractional(c: &mut Criterion) {
    let x = UnitVector::from_spherical(1.1, 0.4);
    let f = SpectralField::real_part_of_mode(5, 5, 3);
    let mut g = c.benchmark_group("fractional");
    let big = random_field(128, 3);
    g.bench_function("spectral_L128", |b| {
        b.iter(|| lambda_power(black_box(&big), 1.0))
    });
    let q = SemigroupQuadrature::standard().calibrated(1.0).unwrap();
    g.bench_function("semigroup_point", |b| {
        b.iter(|| lambda_semigroup(black_box(&f), &x, 1.0, &q))
    });
    for ql in [32usize, 64, 128] {
        let k = SingularKernel::standard(1.0, ql).unwrap();
        g.bench_with_input(BenchmarkId::new("singular_point", ql), &ql, |b, _| {
            b.iter(|| lambda_singular(black_box(&f), &x, &k))
        });
        g.bench_with_input(BenchmarkId::new("dirichlet_d", ql), &ql, |b, _| {
            b.iter(|| dirichlet_d(black_box(&f), &x, &k))
        });
    }
    g.finish();
}

fn heat(c: &mut Criterion) {
    let mut g = c.benchmark_group("heat_kernel");
    for (d, t) in [(0.3, 1.0), (0.3, 0.01), (2.5, 0.005)] {
        g.bench_function(format!("d{d}_t{t}"), |b| {
            b.iter(|| heat_kernel_at_distance(black_box(d), t, 0))
        });
    }
    g.finish();
}

criterion_group!(benches, fractional, heat);
criterion_main!(benches);
