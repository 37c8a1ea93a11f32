//! Scratch probe: compare slice-aggregation conventions on real sampler
//! output. For each replicate and method, project both sample sets on the
//! same directions and report RMS-of-W2, mean-of-W2, and mean-of-W1.

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::GmDenoiser;
use mgps_core::rng::{normal_vector, stream_rng};
use mgps_core::samplers::GradStepRule;
use mgps_core::schedule::MidpointPlan;
use mgps_core::{
    build_schedule, dps_sample, gm_exact_posterior, mgps_sample, pgdm_sample, DpsConfig,
    MgpsConfig, PgdmConfig, SampleSet,
};
use nalgebra::DVector;

fn conventions(a: &SampleSet, b: &SampleSet, n_slices: usize, seed: u64, r: u64) -> (f64, f64, f64) {
    let mut rng = stream_rng(seed, "slices", &[r, 9]);
    let d = a.dim();
    let mut rms_acc = 0.0;
    let mut mean_w2_acc = 0.0;
    let mut mean_w1_acc = 0.0;
    let mut pa: Vec<f64> = vec![0.0; a.len()];
    let mut pb: Vec<f64> = vec![0.0; b.len()];
    for _ in 0..n_slices {
        let v: DVector<f64> = normal_vector(&mut rng, d);
        let v = &v / v.norm();
        for (s, row) in pa.iter_mut().zip(a.rows()) {
            *s = v.dot(row);
        }
        for (s, row) in pb.iter_mut().zip(b.rows()) {
            *s = v.dot(row);
        }
        pa.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let m = pa.len().min(pb.len());
        let mut w2sq = 0.0;
        let mut w1 = 0.0;
        for i in 0..m {
            let g = pa[i] - pb[i];
            w2sq += g * g;
            w1 += g.abs();
        }
        w2sq /= m as f64;
        w1 /= m as f64;
        rms_acc += w2sq;
        mean_w2_acc += w2sq.sqrt();
        mean_w1_acc += w1;
    }
    let k = n_slices as f64;
    ((rms_acc / k).sqrt(), mean_w2_acc / k, mean_w1_acc / k)
}

fn main() {
    let d = 20;
    let n = 300;
    let seed = 0u64;
    let samples = 500usize;
    let slices = 2000usize;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();

    let mut sums = [[0.0f64; 3]; 3];
    let reps = 6u64;
    for r in 0..reps {
        let mut prng = stream_rng(seed, "problem", &[r]);
        let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
        let den = GmDenoiser::new(&prior, &sched).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        let mut erng = stream_rng(seed, "exact", &[r]);
        let exact =
            SampleSet::new((0..samples).map(|_| post.sample(&mut erng)).collect()).unwrap();

        let mgps_cfg = MgpsConfig {
            plan: MidpointPlan::proportional(n, 0.75).unwrap(),
            grad_steps: GradStepRule::default(),
            lr: 0.1,
            warm_start: None,
        };
        let dps_cfg = DpsConfig { zeta: 1.0 };
        let pgdm_cfg = PgdmConfig::default();

        for (mi, name) in ["mgps", "dps", "pgdm"].iter().enumerate() {
            let mut rows = Vec::new();
            for c in 0..samples as u64 {
                let mut rng = stream_rng(seed, "chain", &[r, mi as u64, c]);
                let out = match mi {
                    0 => mgps_sample(&sched, &den, &lik, &mgps_cfg, &mut rng).unwrap(),
                    1 => dps_sample(&sched, &den, &lik, &dps_cfg, &mut rng).unwrap(),
                    _ => pgdm_sample(&sched, &den, &lik, &pgdm_cfg, &mut rng).unwrap(),
                };
                if !out.diverged {
                    rows.push(out.x0);
                }
            }
            let set = SampleSet::new(rows).unwrap();
            let (rms, mw2, mw1) = conventions(&set, &exact, slices, seed, r);
            println!("r{r} {name}: rms-W2 {rms:.3}  mean-W2 {mw2:.3}  mean-W1 {mw1:.3}");
            sums[mi][0] += rms;
            sums[mi][1] += mw2;
            sums[mi][2] += mw1;
        }
    }
    for (mi, name) in ["mgps", "dps", "pgdm"].iter().enumerate() {
        println!(
            "MEAN {name}: rms-W2 {:.3}  mean-W2 {:.3}  mean-W1 {:.3}",
            sums[mi][0] / reps as f64,
            sums[mi][1] / reps as f64,
            sums[mi][2] / reps as f64
        );
    }
}
