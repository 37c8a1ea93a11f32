//! Scratch probe: per-zeta mean data residual |y - A x0| on the tiled
//! mixture benchmark, to pick the tuning criterion for the harness.

use mgbench::problems::draw_gm_problem;
use mgps_core::rng::stream_rng;
use mgps_core::{build_schedule, dps_sample, DpsConfig, GmDenoiser};

fn main() {
    let d = 20;
    let n = 300;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();
    for &zeta in &[0.1, 0.3, 1.0] {
        let mut resid_sum = 0.0;
        let mut count = 0usize;
        for r in 0..10u64 {
            let mut prng = stream_rng(7, "problem", &[r]);
            let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
            let den = GmDenoiser::new(&prior, &sched).unwrap();
            for c in 0..100u64 {
                let mut crng = stream_rng(7, "chain", &[r, 1, c]);
                let out = dps_sample(&sched, &den, &lik, &DpsConfig { zeta }, &mut crng)
                    .unwrap();
                if !out.diverged {
                    resid_sum += (lik.y() - lik.a() * &out.x0).norm();
                    count += 1;
                }
            }
        }
        println!("zeta {zeta}: mean residual {:.4} over {count} chains", resid_sum / count as f64);
    }
}
