use criterion::{criterion_group, criterion_main, Criterion};
use linsel_bench::{batch, hard};
use linsel_core::{run_batch, AlgorithmSpec};

fn gems(c: &mut Criterion) {
    let inst = hard(3);
    let mut group = c.benchmark_group("gems");
    group.sample_size(10);
    let cases = [
        (
            "gems_c",
            AlgorithmSpec::GemsC {
                delta: 0.1,
                n: 4,
                budget: 4096.0,
            },
        ),
        (
            "master_fc",
            AlgorithmSpec::MasterFc {
                delta: 0.1,
                max_ell: 10,
            },
        ),
        ("master_fb", AlgorithmSpec::MasterFb { total: 65536.0 }),
    ];
    for (name, algorithm) in cases {
        let cfg = batch(algorithm, 8);
        group.bench_function(name, |b| {
            b.iter(|| run_batch(&inst, &cfg).unwrap().error_rate)
        });
    }
    group.finish();
}

criterion_group!(benches, gems);
criterion_main!(benches);
