use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cwb::weights::continuous_weights_with;
use cwb::{DensityModel, Execution, TargetSpec, WeightOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    (0..n).map(|_| rng.random_range(0.0..5.0) + rng.random_range(0.0..1.0)).collect()
}

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn kde_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("kde_batch");
    for n in [1_000usize, 5_000] {
        let xs = sample(n);
        let model = DensityModel::fit(xs.clone(), None).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &xs, |b, xs| {
                b.iter(|| model.pdf_batch_with(black_box(xs), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn continuous(c: &mut Criterion) {
    let mut group = c.benchmark_group("continuous_weights");
    group.sample_size(10);
    let target = TargetSpec::normal(3.0, 1.0).unwrap();
    let opts = WeightOptions::default();
    for n in [2_000usize, 20_640] {
        let xs = sample(n);
        let model = DensityModel::fit(xs.clone(), None).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &xs, |b, xs| {
                b.iter(|| continuous_weights_with(black_box(xs), &model, &target, &opts, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, kde_batch, continuous);
criterion_main!(benches);
