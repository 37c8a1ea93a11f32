//! Scratch probe: finite-sample floor of the sliced Wasserstein estimate,
//! measured between two independent exact-posterior sample sets.

use mgbench::problems::draw_gm_problem;
use mgps_core::rng::stream_rng;
use mgps_core::{gm_exact_posterior, sliced_wasserstein, SampleSet};

fn main() {
    let d = 20;
    for &samples in &[500usize, 1000, 2000] {
        let mut vals = Vec::new();
        for r in 0..10u64 {
            let mut prng = stream_rng(7, "problem", &[r]);
            let (prior, lik) = draw_gm_problem(d, 1, 0.05, &mut prng).unwrap();
            let post = gm_exact_posterior(&prior, &lik).unwrap();
            let mut e1 = stream_rng(7, "exact", &[r]);
            let mut e2 = stream_rng(7, "exact-b", &[r]);
            let a = SampleSet::new((0..samples).map(|_| post.sample(&mut e1)).collect()).unwrap();
            let b = SampleSet::new((0..samples).map(|_| post.sample(&mut e2)).collect()).unwrap();
            let mut srng = stream_rng(7, "slices", &[r, 0]);
            vals.push(sliced_wasserstein(&a, &b, 2000, &mut srng).unwrap());
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        println!("n={samples}: mean floor {mean:.3}, max {max:.3}");
    }
}
