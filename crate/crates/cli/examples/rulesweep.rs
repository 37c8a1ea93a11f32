//! Scratch probe: does an active warm start rescue the replicates where the
//! chain commits to the wrong mixture strata at high noise?

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::GmDenoiser;
use mgps_core::rng::stream_rng;
use mgps_core::samplers::GradStepRule;
use mgps_core::schedule::MidpointPlan;
use mgps_core::{
    build_schedule, gm_exact_posterior, mgps_sample, sliced_wasserstein, MgpsConfig, SampleSet,
};

fn main() {
    let d = 20;
    let n = 300;
    let seed = 0u64;
    let samples = 300usize;
    let reps = 10u64;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();

    let cases: Vec<(String, Option<usize>, f64)> = vec![
        ("no warm".into(), None, 0.75),
        ("warm 225".into(), Some(225), 0.75),
        ("warm 150".into(), Some(150), 0.75),
        ("warm 150 eta.5".into(), Some(150), 0.5),
    ];

    let mut per_case: Vec<Vec<f64>> = vec![Vec::new(); cases.len()];
    for r in 0..reps {
        let mut prng = stream_rng(seed, "problem", &[r]);
        let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
        let den = GmDenoiser::new(&prior, &sched).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        let mut erng = stream_rng(seed, "exact", &[r]);
        let exact =
            SampleSet::new((0..samples).map(|_| post.sample(&mut erng)).collect()).unwrap();

        for (ci, (name, warm, eta)) in cases.iter().enumerate() {
            let cfg = MgpsConfig {
                plan: MidpointPlan::proportional(n, *eta).unwrap(),
                grad_steps: GradStepRule::default(),
                lr: 0.1,
                warm_start: *warm,
            };
            let mut rows = Vec::new();
            for c in 0..samples as u64 {
                let mut rng = stream_rng(seed, "chain", &[r, 0, c]);
                let out = mgps_sample(&sched, &den, &lik, &cfg, &mut rng).unwrap();
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
    for (ci, (name, _, _)) in cases.iter().enumerate() {
        let vals = &per_case[ci];
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let bad = vals.iter().filter(|v| **v > 6.0).count();
        println!(
            "MEAN {name}: {mean:.3}  (capped mean, {bad}/{} reps above 6)",
            vals.len()
        );
    }
}
