//! Scratch probe: per-component occupancy on catastrophic replicates.
//! Prints the exact posterior weights next to where each sampler puts its
//! mass, plus slab geometry per stratum.

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::GmDenoiser;
use mgps_core::rng::stream_rng;
use mgps_core::samplers::GradStepRule;
use mgps_core::schedule::MidpointPlan;
use mgps_core::{
    build_schedule, dps_sample, gm_exact_posterior, mgps_sample, pgdm_sample, DpsConfig,
    MgpsConfig, PgdmConfig,
};
use nalgebra::DVector;

fn occupancy(rows: &[DVector<f64>], means: &[DVector<f64>]) -> Vec<usize> {
    let mut counts = vec![0usize; means.len()];
    for x in rows {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, m) in means.iter().enumerate() {
            let d = (x - m).norm();
            if d < bd {
                bd = d;
                best = i;
            }
        }
        counts[best] += 1;
    }
    counts
}

fn main() {
    let d = 20;
    let n = 300;
    let seed = 0u64;
    let samples = 300usize;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();

    for r in [0u64, 4u64, 1u64] {
        let mut prng = stream_rng(seed, "problem", &[r]);
        let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
        let den = GmDenoiser::new(&prior, &sched).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();

        let a = lik.a().row(0).transpose();
        let y = lik.y()[0];
        let an = a.norm();
        println!("== rep {r}: y = {y:.2}, |a| = {an:.3}, y/|a| = {:.3}", y / an);

        let means = prior.means().to_vec();
        let wbar = post.weights();
        let sd = (0.05f64.powi(2) + an * an).sqrt();

        let mut erng = stream_rng(seed, "exact", &[r]);
        let exact: Vec<DVector<f64>> = (0..samples).map(|_| post.sample(&mut erng)).collect();

        let mgps_cfg = MgpsConfig {
            plan: MidpointPlan::proportional(n, 0.75).unwrap(),
            grad_steps: GradStepRule::default(),
            lr: 0.1,
            warm_start: None,
        };
        let mut sets: Vec<Vec<DVector<f64>>> = Vec::new();
        for mi in 0..3u64 {
            let mut rows = Vec::new();
            for c in 0..samples as u64 {
                let mut rng = stream_rng(seed, "chain", &[r, mi, c]);
                let out = match mi {
                    0 => mgps_sample(&sched, &den, &lik, &mgps_cfg, &mut rng).unwrap(),
                    1 => dps_sample(&sched, &den, &lik, &DpsConfig { zeta: 1.0 }, &mut rng)
                        .unwrap(),
                    _ => pgdm_sample(&sched, &den, &lik, &PgdmConfig::default(), &mut rng)
                        .unwrap(),
                };
                if !out.diverged {
                    rows.push(out.x0);
                }
            }
            sets.push(rows);
        }

        let occ_exact = occupancy(&exact, &means);
        let occ = [
            occupancy(&sets[0], &means),
            occupancy(&sets[1], &means),
            occupancy(&sets[2], &means),
        ];
        println!("comp  (i,j)    w_prior   wbar     slab_z   exact mgps dps pgdm");
        for i in 0..means.len() {
            let any = wbar[i] > 1e-4
                || occ_exact[i] > 0
                || occ[0][i] > 0
                || occ[1][i] > 0
                || occ[2][i] > 0;
            if !any {
                continue;
            }
            let proj = a.dot(&means[i]);
            let z = (y - proj) / sd;
            let gi = (means[i][0] / 8.0).round() as i64;
            let gj = (means[i][1] / 8.0).round() as i64;
            println!(
                "{i:>4}  ({gi:>2},{gj:>2})  {:.4}   {:.4}   {z:>7.2}   {:>4}  {:>4} {:>4} {:>4}",
                prior.weights()[i],
                wbar[i],
                occ_exact[i],
                occ[0][i],
                occ[1][i],
                occ[2][i]
            );
        }
    }
}
