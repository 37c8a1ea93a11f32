//! Scratch probe: does optimization pressure sharpen MGPS stratum
//! allocation? Sweeps grad-step rules and learning rates on one replicate
//! and prints occupancy of the dominant stratum plus SW.

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::GmDenoiser;
use mgps_core::rng::stream_rng;
use mgps_core::samplers::GradStepRule;
use mgps_core::schedule::MidpointPlan;
use mgps_core::{
    build_schedule, gm_exact_posterior, mgps_sample, sliced_wasserstein, MgpsConfig, SampleSet,
};
use nalgebra::DVector;

fn main() {
    let d = 20;
    let n = 300;
    let seed = 0u64;
    let r = 0u64;
    let samples = 300usize;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();
    let mut prng = stream_rng(seed, "problem", &[r]);
    let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
    let den = GmDenoiser::new(&prior, &sched).unwrap();
    let post = gm_exact_posterior(&prior, &lik).unwrap();
    let mut erng = stream_rng(seed, "exact", &[r]);
    let exact = SampleSet::new((0..samples).map(|_| post.sample(&mut erng)).collect()).unwrap();
    let means = prior.means().to_vec();
    let dominant = post
        .weights()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    println!(
        "dominant comp {dominant} wbar {:.3}",
        post.weights()[dominant]
    );

    let cases: Vec<(String, f64, GradStepRule, f64)> = vec![
        ("eta .75 table lr .1".into(), 0.75, GradStepRule::default(), 0.1),
        ("eta .75 const5 lr .1".into(), 0.75, GradStepRule::Constant(5), 0.1),
        ("eta .75 const20 lr .1".into(), 0.75, GradStepRule::Constant(20), 0.1),
        ("eta .75 const50 lr .1".into(), 0.75, GradStepRule::Constant(50), 0.1),
        ("eta .75 table lr .03".into(), 0.75, GradStepRule::default(), 0.03),
        ("eta .75 const20 lr .03".into(), 0.75, GradStepRule::Constant(20), 0.03),
        ("eta .5  table lr .1".into(), 0.5, GradStepRule::default(), 0.1),
        ("eta .5  const20 lr .1".into(), 0.5, GradStepRule::Constant(20), 0.1),
    ];
    for (name, eta, rule, lr) in cases {
        let cfg = MgpsConfig {
            plan: MidpointPlan::proportional(n, eta).unwrap(),
            grad_steps: rule,
            lr,
            warm_start: None,
        };
        let mut rows: Vec<DVector<f64>> = Vec::new();
        for c in 0..samples as u64 {
            let mut rng = stream_rng(seed, "chain", &[r, 0, c]);
            let out = mgps_sample(&sched, &den, &lik, &cfg, &mut rng).unwrap();
            if !out.diverged {
                rows.push(out.x0);
            }
        }
        let frac = rows
            .iter()
            .filter(|x| {
                let mut best = 0;
                let mut bd = f64::INFINITY;
                for (i, m) in means.iter().enumerate() {
                    let dd = (*x - m).norm();
                    if dd < bd {
                        bd = dd;
                        best = i;
                    }
                }
                best == dominant
            })
            .count() as f64
            / rows.len() as f64;
        let set = SampleSet::new(rows).unwrap();
        let mut srng = stream_rng(seed, "slices", &[r, 0]);
        let sw = sliced_wasserstein(&set, &exact, 2000, &mut srng).unwrap();
        println!("{name}: dom-frac {frac:.3}  SW {sw:.3}");
    }
}
