//! Scratch probe: replace the variational fit with exact SIR draws from the
//! per-step surrogate target pî_{ℓ|k+1} ∝ p(y|m_{0|ℓ}(x)) q_{ℓ|0,k+1}(x|..).
//! If this allocates strata correctly, the surrogate decomposition is sound
//! and the gap is purely in the optimization.

use mgbench::problems::draw_gm_problem;
use mgps_core::priors::{Denoiser, GmDenoiser};
use mgps_core::rng::{normal_vector, stream_rng};
use mgps_core::schedule::MidpointPlan;
use mgps_core::Likelihood;
use mgps_core::{build_schedule, gm_exact_posterior, sliced_wasserstein, SampleSet};
use nalgebra::DVector;
use rand::Rng;

fn main() {
    let d = 20;
    let n = 300;
    let seed = 0u64;
    let r = 0u64;
    let samples = 200usize;
    let n_sir = 1024usize;
    let sched = build_schedule(1000, 1e-4, 0.02, n).unwrap();
    let mut prng = stream_rng(seed, "problem", &[r]);
    let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
    let den = GmDenoiser::new(&prior, &sched).unwrap();
    let post = gm_exact_posterior(&prior, &lik).unwrap();
    let mut erng = stream_rng(seed, "exact", &[r]);
    let exact = SampleSet::new((0..500).map(|_| post.sample(&mut erng)).collect()).unwrap();
    let means = prior.means().to_vec();
    let wbar = post.weights();

    let plan = MidpointPlan::proportional(n, 0.75).unwrap();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rng = stream_rng(seed, "sir", &[r]);
    for _c in 0..samples {
        let mut x_cur = normal_vector(&mut rng, d);
        let mut anchor = den.value(n, &x_cur);
        for k in (1..n).rev() {
            let ell = plan.ell(k);
            let bridge = sched.bridge_params(0, ell, k + 1).unwrap();
            let denoised_cur = den.value(k + 1, &x_cur);
            let ctx_mean = bridge.mean(&denoised_cur, &x_cur).unwrap();
            let sdev = bridge.var.sqrt();
            // SIR draw from p(y|m_{0|ell}(x)) * N(x; ctx_mean, var I).
            let mut best = f64::NEG_INFINITY;
            let mut pick = ctx_mean.clone();
            for _ in 0..n_sir {
                let z = normal_vector(&mut rng, d);
                let cand = &ctx_mean + &z * sdev;
                let ll = lik.loglik(&den.value(ell, &cand));
                let gumbel = -(-(rng.random::<f64>().max(1e-300)).ln()).ln();
                if ll + gumbel > best {
                    best = ll + gumbel;
                    pick = cand;
                }
            }
            let x_hat_ell = pick;
            let bridge_k = sched.bridge_params(ell, k, k + 1).unwrap();
            let zk = normal_vector(&mut rng, d);
            let x_next = bridge_k.mean(&x_hat_ell, &x_cur).unwrap() + &zk * bridge_k.var.sqrt();
            anchor = den.value(ell, &x_hat_ell);
            x_cur = x_next;
        }
        rows.push(anchor.clone());
    }

    let mut counts = vec![0usize; means.len()];
    for x in &rows {
        let mut bi = 0;
        let mut bd = f64::INFINITY;
        for (i, m) in means.iter().enumerate() {
            let dd = (x - m).norm();
            if dd < bd {
                bd = dd;
                bi = i;
            }
        }
        counts[bi] += 1;
    }
    println!("comp  wbar   sir-frac");
    for i in 0..means.len() {
        if wbar[i] > 1e-3 || counts[i] > 0 {
            println!(
                "{i:>4}  {:.3}  {:.3}",
                wbar[i],
                counts[i] as f64 / rows.len() as f64
            );
        }
    }
    let set = SampleSet::new(rows).unwrap();
    let mut srng = stream_rng(seed, "slices", &[r, 0]);
    let sw = sliced_wasserstein(&set, &exact, 2000, &mut srng).unwrap();
    println!("SIR-MGPS SW {sw:.3}");
}
