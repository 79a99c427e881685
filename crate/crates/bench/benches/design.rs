use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use linsel_bench::hard;
use linsel_core::{compute_gamma, compute_iota_star, compute_rho, SolverConfig};

fn design(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("design");
    for d_star in [3, 6, 11] {
        let inst = hard(d_star);
        group.bench_with_input(BenchmarkId::new("iota_star", d_star), &d_star, |b, &d| {
            b.iter(|| compute_iota_star(&inst, d, &cfg).unwrap().value)
        });
        group.bench_with_input(BenchmarkId::new("rho", d_star), &d_star, |b, &d| {
            b.iter(|| compute_rho(&inst, d, 0.0, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gamma", d_star), &d_star, |b, &d| {
            b.iter(|| compute_gamma(&inst, d - 1, 0.25, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, design);
criterion_main!(benches);
