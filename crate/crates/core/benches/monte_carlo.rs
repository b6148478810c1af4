use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use statforge::exec;
use statforge::stochastic::{bs_mc_price, ito_isometry_study, BsParams, Integrand};
use statforge::RandomStream;

fn modes(c: &mut Criterion) {
    let params = BsParams::new(100.0, 100.0, 0.05, 0.2, 1.0).unwrap();
    let root = RandomStream::new(7);
    let mut g = c.benchmark_group("fan_out");
    g.sample_size(10);
    for (label, sequential) in [("parallel", false), ("sequential", true)] {
        g.bench_function(BenchmarkId::new("bs_mc_200k", label), |b| {
            exec::force_sequential(sequential);
            b.iter(|| bs_mc_price(&params, 200_000, &root).unwrap().estimate);
            exec::force_sequential(false);
        });
        g.bench_function(BenchmarkId::new("ito_isometry_5k_paths", label), |b| {
            exec::force_sequential(sequential);
            b.iter(|| ito_isometry_study(Integrand::Brownian, 1.0, 200, 5_000, &root).unwrap().second_moment);
            exec::force_sequential(false);
        });
    }
    g.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
