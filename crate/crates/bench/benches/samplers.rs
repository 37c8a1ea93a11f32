//! Per-chain cost of each sampler on a small mixture problem.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mgps_core::priors::GmDenoiser;
use mgps_core::{
    build_schedule, dps_sample, mgps_sample, pgdm_sample, DpsConfig, GaussianMixturePrior,
    GradStepRule, LinearGaussianLikelihood, MgpsConfig, MidpointPlan, NoiseSchedule, PgdmConfig,
    PgdmWeightRule,
};

struct Setup {
    sched: NoiseSchedule,
    den: GmDenoiser,
    lik: LinearGaussianLikelihood,
}

fn setup(d: usize, n: usize) -> Setup {
    let spacing = 8.0;
    let means: Vec<DVector<f64>> = (-1..=1)
        .map(|i| DVector::from_element(d, spacing * i as f64))
        .collect();
    let prior = GaussianMixturePrior::new(vec![1.0; means.len()], means, vec![1.0; 3]).unwrap();
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();
    let den = GmDenoiser::new(&prior, &sched).unwrap();
    let a = DMatrix::from_fn(1, d, |_, j| if j % 2 == 0 { 0.7 } else { -0.4 });
    let y = DVector::from_vec(vec![2.0]);
    let lik = LinearGaussianLikelihood::new(a, y, 0.5).unwrap();
    Setup { sched, den, lik }
}

fn bench_samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("chain");
    for &d in &[4usize, 16] {
        let s = setup(d, 50);
        let mcfg = MgpsConfig {
            plan: MidpointPlan::proportional(50, 0.75).unwrap(),
            grad_steps: GradStepRule::default(),
            lr: 0.1,
            warm_start: None,
        };
        group.bench_with_input(BenchmarkId::new("mgps", d), &s, |b, s| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            b.iter(|| mgps_sample(&s.sched, &s.den, &s.lik, &mcfg, &mut rng).unwrap())
        });
        let dcfg = DpsConfig { zeta: 0.3 };
        group.bench_with_input(BenchmarkId::new("dps", d), &s, |b, s| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            b.iter(|| dps_sample(&s.sched, &s.den, &s.lik, &dcfg, &mut rng).unwrap())
        });
        let pcfg = PgdmConfig {
            weight: PgdmWeightRule::AlphaProduct,
        };
        group.bench_with_input(BenchmarkId::new("pgdm", d), &s, |b, s| {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            b.iter(|| pgdm_sample(&s.sched, &s.den, &s.lik, &pcfg, &mut rng).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_samplers);
criterion_main!(benches);
