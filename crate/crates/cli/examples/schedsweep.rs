//! Scratch probe: sweep the noise schedule (coarse-step count and shape) on
//! the replicates where the default linear schedule misallocates strata.

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::GmDenoiser;
use mgps_core::rng::stream_rng;
use mgps_core::samplers::GradStepRule;
use mgps_core::schedule::{MidpointPlan, NoiseSchedule};
use mgps_core::{
    build_schedule, gm_exact_posterior, mgps_sample, sliced_wasserstein, MgpsConfig, SampleSet,
};

fn cosine_schedule(n: usize) -> NoiseSchedule {
    let s = 0.008f64;
    let denom = ((0.5 * std::f64::consts::PI) * s / (1.0 + s)).cos().powi(2);
    let mut alphas = vec![1.0];
    for k in 1..=n {
        let u = k as f64 / n as f64;
        let a = ((0.5 * std::f64::consts::PI) * (u + s) / (1.0 + s)).cos().powi(2) / denom;
        let hi = alphas[k - 1] * 0.9999;
        alphas.push(a.max(4e-5).min(hi));
    }
    NoiseSchedule::from_alphas(alphas).unwrap()
}

fn log_uniform_schedule(n: usize) -> NoiseSchedule {
    let a1 = 0.9998f64;
    let an = 4e-5f64;
    let mut alphas = vec![1.0];
    for k in 1..=n {
        let u = (k - 1) as f64 / (n - 1) as f64;
        alphas.push(a1 * (an / a1).powf(u));
    }
    NoiseSchedule::from_alphas(alphas).unwrap()
}

fn main() {
    let d = 20;
    let seed = 0u64;
    let samples = 300usize;
    let reps: Vec<u64> = vec![0, 1, 4, 6, 9];

    let cases: Vec<(String, NoiseSchedule)> = vec![
        ("linear n300".into(), build_schedule(1000, 1e-4, 0.02, 300).unwrap()),
        ("linear n600".into(), build_schedule(1000, 1e-4, 0.02, 600).unwrap()),
        ("linear n1000".into(), build_schedule(1000, 1e-4, 0.02, 1000).unwrap()),
        ("cosine n300".into(), cosine_schedule(300)),
        ("loguni n300".into(), log_uniform_schedule(300)),
    ];

    let mut per_case: Vec<Vec<f64>> = vec![Vec::new(); cases.len()];
    for &r in &reps {
        let mut prng = stream_rng(seed, "problem", &[r]);
        let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        let mut erng = stream_rng(seed, "exact", &[r]);
        let exact =
            SampleSet::new((0..samples).map(|_| post.sample(&mut erng)).collect()).unwrap();

        for (ci, (name, sched)) in cases.iter().enumerate() {
            let den = GmDenoiser::new(&prior, sched).unwrap();
            let n = sched.n();
            let cfg = MgpsConfig {
                plan: MidpointPlan::proportional(n, 0.75).unwrap(),
                grad_steps: GradStepRule::default(),
                lr: 0.1,
                warm_start: None,
            };
            let mut rows = Vec::new();
            for c in 0..samples as u64 {
                let mut rng = stream_rng(seed, "chain", &[r, 0, c]);
                let out = mgps_sample(sched, &den, &lik, &cfg, &mut rng).unwrap();
                if !out.diverged {
                    rows.push(out.x0);
                }
            }
            let set = SampleSet::new(rows).unwrap();
            let mut srng = stream_rng(seed, "slices", &[r, 0]);
            let sw = sliced_wasserstein(&set, &exact, 2000, &mut srng)
                .unwrap()
                .min(10.0);
            println!("r{r} {name}: SW {sw:.3}");
            per_case[ci].push(sw);
        }
    }
    for (ci, (name, _)) in cases.iter().enumerate() {
        let vals = &per_case[ci];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        println!("MEAN {name}: {mean:.3}");
    }
}
