//! Cost of the evaluation metrics at benchmark-realistic sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use mgps_core::{gaussian_w2, sliced_wasserstein, SampleSet};

fn normal_set(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> SampleSet {
    let rows = (0..n)
        .map(|_| DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal) + shift))
        .collect();
    SampleSet::new(rows).unwrap()
}

fn bench_sliced(c: &mut Criterion) {
    let mut group = c.benchmark_group("sliced_wasserstein");
    for &(n, d, slices) in &[(500usize, 20usize, 500usize), (1000, 20, 1000)] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = normal_set(&mut rng, n, d, 0.0);
        let b = normal_set(&mut rng, n, d, 0.5);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("n{n}_d{d}_s{slices}")),
            &(a, b),
            |bench, (a, b)| {
                let mut srng = ChaCha8Rng::seed_from_u64(12);
                bench.iter(|| sliced_wasserstein(a, b, slices, &mut srng).unwrap())
            },
        );
    }
    group.finish();
}

fn bench_gaussian_w2(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian_w2");
    for &d in &[20usize, 100] {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c1 = &g * g.transpose() + DMatrix::identity(d, d);
        let h = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c2 = &h * h.transpose() + DMatrix::identity(d, d);
        let m1 = DVector::zeros(d);
        let m2 = DVector::from_element(d, 0.3);
        group.bench_with_input(
            BenchmarkId::from_parameter(d),
            &(m1, c1, m2, c2),
            |bench, (m1, c1, m2, c2)| bench.iter(|| gaussian_w2(m1, c1, m2, c2).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_sliced, bench_gaussian_w2);
criterion_main!(benches);
