//! Benchmark problem construction: the tiled Gaussian-mixture protocol and
//! user-supplied problem descriptions for the `sample` experiment.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Deserialize;

use mgps_core::priors::{GaussianMixturePrior, GaussianPrior, GmDenoiser};
use mgps_core::rng::normal_vector;
use mgps_core::schedule::NoiseSchedule;
use mgps_core::{
    Denoiser, GaussianDenoiser, Likelihood, LinearGaussianLikelihood, MagnitudeLikelihood,
};

use crate::error::{CliError, Result};

/// Number of mixture components in the benchmark prior.
pub const GM_COMPONENTS: usize = 25;

/// The 25 benchmark component means: for grid offsets `(i, j)` with
/// `i, j ∈ {-2, …, 2}`, the mean repeats the pattern `(8i, 8j, 8i, 8j, …)`
/// out to length `d` (odd `d` truncates the pattern).
pub fn gm_tiled_means(d: usize) -> Vec<DVector<f64>> {
    let mut means = Vec::with_capacity(GM_COMPONENTS);
    for i in -2i32..=2 {
        for j in -2i32..=2 {
            means.push(DVector::from_fn(d, |c, _| {
                if c % 2 == 0 {
                    8.0 * f64::from(i)
                } else {
                    8.0 * f64::from(j)
                }
            }));
        }
    }
    means
}

/// Draw one benchmark replicate: component weights uniform on [0, 1]
/// (normalized by the prior), a `d_y × d` standard normal observation
/// operator, a ground-truth draw from the prior, and the noisy observation.
///
/// Draw order is fixed (weights, operator, ground truth, noise) so a given
/// generator state always yields the same problem.
pub fn draw_gm_problem<R: Rng + ?Sized>(
    d: usize,
    d_y: usize,
    sigma_y: f64,
    rng: &mut R,
) -> Result<(GaussianMixturePrior, LinearGaussianLikelihood)> {
    let weights: Vec<f64> = (0..GM_COMPONENTS).map(|_| rng.random::<f64>()).collect();
    let prior = GaussianMixturePrior::new(weights, gm_tiled_means(d), vec![1.0; GM_COMPONENTS])?;
    let a = DMatrix::from_fn(d_y, d, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let x_star = prior.sample(rng);
    let y = &a * x_star + normal_vector(rng, d_y) * sigma_y;
    let lik = LinearGaussianLikelihood::new(a, y, sigma_y)?;
    Ok((prior, lik))
}

/// Prior description in a problem JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorSpec {
    Gaussian {
        mean: Vec<f64>,
        cov: Vec<Vec<f64>>,
    },
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        sigmas: Vec<f64>,
    },
}

/// Likelihood description in a problem JSON file.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LikelihoodSpec {
    Linear {
        a: Vec<Vec<f64>>,
        y: Vec<f64>,
        sigma_y: f64,
    },
    Magnitude {
        a: Vec<Vec<f64>>,
        y: Vec<f64>,
        sigma_y: f64,
    },
}

/// A problem file: a prior and an observation model.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub prior: PriorSpec,
    pub likelihood: LikelihoodSpec,
}

/// A constructed prior, either form.
pub enum BuiltPrior {
    Gaussian(GaussianPrior),
    Mixture(GaussianMixturePrior),
}

impl BuiltPrior {
    pub fn dim(&self) -> usize {
        match self {
            BuiltPrior::Gaussian(p) => p.mean().len(),
            BuiltPrior::Mixture(p) => p.dim(),
        }
    }

    pub fn denoiser(&self, sched: &NoiseSchedule) -> Result<Box<dyn Denoiser>> {
        Ok(match self {
            BuiltPrior::Gaussian(p) => Box::new(GaussianDenoiser::new(p, sched)?),
            BuiltPrior::Mixture(p) => Box::new(GmDenoiser::new(p, sched)?),
        })
    }
}

/// A constructed likelihood, either form.
pub enum BuiltLikelihood {
    Linear(LinearGaussianLikelihood),
    Magnitude(MagnitudeLikelihood),
}

impl BuiltLikelihood {
    pub fn as_dyn(&self) -> &dyn Likelihood {
        match self {
            BuiltLikelihood::Linear(l) => l,
            BuiltLikelihood::Magnitude(l) => l,
        }
    }

    pub fn linear(&self) -> Option<&LinearGaussianLikelihood> {
        match self {
            BuiltLikelihood::Linear(l) => Some(l),
            BuiltLikelihood::Magnitude(_) => None,
        }
    }
}

fn dense(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(CliError::Config(format!("{field} must not be empty")));
    }
    let cols = rows[0].len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != cols {
            return Err(CliError::Config(format!(
                "{field} row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        cols,
        rows.iter().flatten().copied(),
    ))
}

/// Parse and construct a problem from its JSON text.
pub fn build_problem(text: &str) -> Result<(BuiltPrior, BuiltLikelihood)> {
    let spec: ProblemSpec = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("invalid problem JSON: {e}")))?;
    let prior = match &spec.prior {
        PriorSpec::Gaussian { mean, cov } => BuiltPrior::Gaussian(GaussianPrior::new(
            DVector::from_vec(mean.clone()),
            dense("prior.cov", cov)?,
        )?),
        PriorSpec::GaussianMixture {
            weights,
            means,
            sigmas,
        } => {
            let means: Vec<DVector<f64>> = means
                .iter()
                .map(|m| DVector::from_vec(m.clone()))
                .collect();
            BuiltPrior::Mixture(GaussianMixturePrior::new(
                weights.clone(),
                means,
                sigmas.clone(),
            )?)
        }
    };
    let lik = match &spec.likelihood {
        LikelihoodSpec::Linear { a, y, sigma_y } => BuiltLikelihood::Linear(
            LinearGaussianLikelihood::new(
                dense("likelihood.a", a)?,
                DVector::from_vec(y.clone()),
                *sigma_y,
            )?,
        ),
        LikelihoodSpec::Magnitude { a, y, sigma_y } => BuiltLikelihood::Magnitude(
            MagnitudeLikelihood::new(
                dense("likelihood.a", a)?,
                DVector::from_vec(y.clone()),
                *sigma_y,
            )?,
        ),
    };
    if lik.as_dyn().dim() != prior.dim() {
        return Err(CliError::Config(format!(
            "likelihood acts on dimension {} but the prior has dimension {}",
            lik.as_dyn().dim(),
            prior.dim()
        )));
    }
    Ok((prior, lik))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mgps_core::rng::stream_rng;

    #[test]
    fn tiled_means_cover_the_grid() {
        let means = gm_tiled_means(5);
        assert_eq!(means.len(), 25);
        // First component is (i, j) = (-2, -2): pattern (-16, -16, …).
        assert_eq!(means[0].as_slice(), &[-16.0, -16.0, -16.0, -16.0, -16.0]);
        // Component (i, j) = (-2, -1) follows: alternating -16, -8.
        assert_eq!(means[1].as_slice(), &[-16.0, -8.0, -16.0, -8.0, -16.0]);
        // Center component is all zeros.
        assert_eq!(means[12].as_slice(), &[0.0; 5]);
        // Last is (2, 2).
        assert_eq!(means[24].as_slice(), &[16.0; 5]);
    }

    #[test]
    fn replicate_draw_is_deterministic() {
        let mut r1 = stream_rng(5, "problem", &[0]);
        let mut r2 = stream_rng(5, "problem", &[0]);
        let (p1, l1) = draw_gm_problem(6, 1, 0.05, &mut r1).unwrap();
        let (p2, l2) = draw_gm_problem(6, 1, 0.05, &mut r2).unwrap();
        assert_eq!(p1.weights(), p2.weights());
        assert_eq!(l1.y(), l2.y());
        assert_eq!(l1.a(), l2.a());
    }

    #[test]
    fn problem_json_round_trips() {
        let text = r#"{
            "prior": {"kind": "gaussian", "mean": [0.0, 0.0],
                      "cov": [[1.0, 0.0], [0.0, 1.0]]},
            "likelihood": {"kind": "linear", "a": [[1.0, 0.0]],
                           "y": [0.5], "sigma_y": 0.1}
        }"#;
        let (prior, lik) = build_problem(text).unwrap();
        assert_eq!(prior.dim(), 2);
        assert_eq!(lik.as_dyn().obs_dim(), 1);
        assert!(lik.linear().is_some());
    }

    #[test]
    fn ragged_matrix_is_diagnosed() {
        let text = r#"{
            "prior": {"kind": "gaussian", "mean": [0.0, 0.0],
                      "cov": [[1.0, 0.0], [0.0]]},
            "likelihood": {"kind": "linear", "a": [[1.0, 0.0]],
                           "y": [0.5], "sigma_y": 0.1}
        }"#;
        let err = match build_problem(text) {
            Err(e) => e,
            Ok(_) => panic!("expected a shape error"),
        };
        assert!(err.to_string().contains("prior.cov row 1"));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = r#"{
            "prior": {"kind": "gaussian", "mean": [0.0, 0.0],
                      "cov": [[1.0, 0.0], [0.0, 1.0]]},
            "likelihood": {"kind": "magnitude", "a": [[1.0, 0.0, 0.0]],
                           "y": [0.5], "sigma_y": 0.1}
        }"#;
        assert!(build_problem(text).is_err());
    }
}
