use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use qwalk::{averaged_kernel, rho, CoinTag, Profile, SpinorState};

fn bench_evolve(c: &mut Criterion) {
    let mut group = c.benchmark_group("evolve");
    for steps in [100u64, 1000, 4000] {
        group.bench_with_input(BenchmarkId::from_parameter(steps), &steps, |b, &steps| {
            let start = SpinorState::from_localized(0, CoinTag::Plus);
            b.iter(|| black_box(start.evolve(steps)).total_probability());
        });
    }
    group.finish();
}

fn bench_kernel(c: &mut Criterion) {
    c.bench_function("averaged_kernel_1000", |b| b.iter(|| averaged_kernel(black_box(1000))));
}

fn bench_rho(c: &mut Criterion) {
    let g = Profile::triangle(-1.0, 0.0, 1.0, 1.0).unwrap();
    c.bench_function("rho_t1", |b| b.iter(|| rho(&g, 1.0, black_box(0.3)).unwrap()));
}

criterion_group!(benches, bench_evolve, bench_kernel, bench_rho);
criterion_main!(benches);
