use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairmtl_core::distrib::wasserstein2_squared;
use fairmtl_core::fairtransform::fit_calibrator;
use fairmtl_core::metrics::ks_unfairness;
use fairmtl_core::{EmpiricalDistribution, GroupLabel, JitterConfig, Predictions, TaskKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(n: usize, seed: u64) -> (Vec<f64>, Vec<GroupLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups: Vec<GroupLabel> = (0..n).map(|_| GroupLabel(if rng.random_bool(0.4) { -1 } else { 1 })).collect();
    let values = groups.iter().map(|g| rng.random_range(-1.0..1.0) + g.0 as f64).collect();
    (values, groups)
}

fn ecdf(c: &mut Criterion) {
    let mut group = c.benchmark_group("ecdf_build");
    for n in [1_000, 100_000] {
        let (values, _) = sample(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &values, |b, v| {
            b.iter(|| EmpiricalDistribution::new(v).unwrap())
        });
    }
    group.finish();
}

fn transform(c: &mut Criterion) {
    let mut group = c.benchmark_group("fair_transform");
    for n in [1_000, 100_000] {
        let (values, groups) = sample(n, 2);
        let pool = Predictions::new(groups, vec![values]).unwrap();
        group.bench_with_input(BenchmarkId::new("fit", n), &pool, |b, p| {
            b.iter(|| fit_calibrator(p, &[TaskKind::Regression], JitterConfig::new(0.001, 0).unwrap()).unwrap())
        });
        let cal = fit_calibrator(&pool, &[TaskKind::Regression], JitterConfig::new(0.001, 0).unwrap()).unwrap();
        group.bench_with_input(BenchmarkId::new("transform_batch", n), &pool, |b, p| {
            b.iter(|| cal.transform_batch(p, 1).unwrap())
        });
    }
    group.finish();
}

fn distances(c: &mut Criterion) {
    let (values, groups) = sample(100_000, 3);
    c.bench_function("ks_unfairness/100000", |b| b.iter(|| ks_unfairness(&values, &groups).unwrap()));
    let a = EmpiricalDistribution::new(&values[..40_000]).unwrap();
    let bb = EmpiricalDistribution::new(&values[40_000..]).unwrap();
    c.bench_function("wasserstein2/40000x60000", |b| b.iter(|| wasserstein2_squared(&a, &bb)));
}

criterion_group!(benches, ecdf, transform, distances);
criterion_main!(benches);
