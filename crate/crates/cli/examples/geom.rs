//! Scratch probe: geometry of each replicate vs observed MGPS quality.
//! Prints slab offset, dominant-stratum coordinates, exact posterior
//! concentration, and dominant-stratum occupancy for the default rule.

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
    let samples = 300usize;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();

    println!("rep  y/|a|   dom(i,j) wbar_max  n_live  dom_occ  SW");
    for r in 0..10u64 {
        let mut prng = stream_rng(seed, "problem", &[r]);
        let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
        let den = GmDenoiser::new(&prior, &sched).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        let mut erng = stream_rng(seed, "exact", &[r]);
        let exact =
            SampleSet::new((0..samples).map(|_| post.sample(&mut erng)).collect()).unwrap();
        let means = prior.means().to_vec();
        let wbar = post.weights();
        let (dom, wmax) = wbar
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, w)| (i, *w))
            .unwrap();
        let n_live = wbar.iter().filter(|w| **w > 0.01).count();
        let a = lik.a().row(0).transpose();
        let yoff = lik.y()[0] / a.norm();
        let gi = (means[dom][0] / 8.0).round() as i64;
        let gj = (means[dom][1] / 8.0).round() as i64;

        let cfg = MgpsConfig {
            plan: MidpointPlan::proportional(n, 0.75).unwrap(),
            grad_steps: GradStepRule::default(),
            lr: 0.1,
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
        let occ = rows
            .iter()
            .filter(|x| {
                let mut bi = 0;
                let mut bd = f64::INFINITY;
                for (i, m) in means.iter().enumerate() {
                    let dd = (*x - m).norm();
                    if dd < bd {
                        bd = dd;
                        bi = i;
                    }
                }
                bi == dom
            })
            .count() as f64
            / rows.len() as f64;
        let set = SampleSet::new(rows).unwrap();
        let mut srng = stream_rng(seed, "slices", &[r, 0]);
        let sw = sliced_wasserstein(&set, &exact, 2000, &mut srng).unwrap().min(10.0);
        println!(
            "{r:>3}  {yoff:>6.2}  ({gi:>2},{gj:>2})  {wmax:.3}    {n_live:>3}    {occ:.3}   {sw:.3}"
        );
    }
}
