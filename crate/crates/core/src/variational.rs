//! Diagonal Gaussian variational family, its objective gradients, and a
//! self-contained Adam optimizer.
//!
//! The family is `q_{μ,ρ}(x) = N(μ, diag(e^{2ρ}))`, optimized per backward
//! step against a target of the form
//!
//! ```text
//! π̂(x) ∝ p(y | m_{0|ℓ}(x)) · N(x; ctx_mean, ctx_var·I)
//! ```
//!
//! The objective `KL(q‖π̂)` splits into a reparameterized guidance term,
//! estimated with one fresh standard normal draw per gradient evaluation,
//! and a Gaussian-to-Gaussian KL available in closed form.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::likelihood::Likelihood;
use crate::priors::Denoiser;
use crate::rng::normal_vector;
use crate::schedule::NoiseSchedule;

/// Parameters `(μ, ρ)` of a diagonal Gaussian `N(μ, diag(e^{2ρ}))`.
#[derive(Debug, Clone)]
pub struct VariationalParams {
    /// Mean `μ`.
    pub mu: DVector<f64>,
    /// Log standard deviations `ρ`.
    pub rho: DVector<f64>,
}

impl VariationalParams {
    /// Pair a mean with log standard deviations of the same length.
    pub fn new(mu: DVector<f64>, rho: DVector<f64>) -> Result<Self> {
        if mu.len() != rho.len() {
            return Err(Error::Parameter(format!(
                "μ has length {} but ρ has length {}",
                mu.len(),
                rho.len()
            )));
        }
        Ok(Self { mu, rho })
    }

    /// Dimension of the family.
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// The reparameterization map `μ + e^ρ ⊙ z`.
    pub fn apply(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.mu.len(), |j, _| {
            self.mu[j] + self.rho[j].exp() * z[j]
        })
    }

    /// Draw one sample by applying the map to a fresh `z ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = normal_vector(rng, self.mu.len());
        self.apply(&z)
    }
}

/// A gradient with respect to `(μ, ρ)`.
#[derive(Debug, Clone)]
pub struct GradSpec {
    /// `∂/∂μ`.
    pub mu: DVector<f64>,
    /// `∂/∂ρ`.
    pub rho: DVector<f64>,
}

impl GradSpec {
    /// The zero gradient in dimension `d`.
    pub fn zeros(d: usize) -> Self {
        Self {
            mu: DVector::zeros(d),
            rho: DVector::zeros(d),
        }
    }
}

/// Closed-form `KL(N(μ, diag(e^{2ρ})) ‖ N(mean, var·I))` and its gradient.
///
/// ```text
/// KL = Σ_j [ −ρ_j + ½ log var + (e^{2ρ_j} + (μ_j − mean_j)²)/(2 var) − ½ ]
/// ∂KL/∂μ_j = (μ_j − mean_j)/var
/// ∂KL/∂ρ_j = −1 + e^{2ρ_j}/var
/// ```
pub fn kl_iso(
    params: &VariationalParams,
    mean: &DVector<f64>,
    var: f64,
) -> Result<(f64, GradSpec)> {
    if !(var > 0.0) {
        return Err(Error::Parameter(format!(
            "KL reference variance must be positive, got {var}"
        )));
    }
    let d = params.dim();
    if mean.len() != d {
        return Err(Error::Parameter(format!(
            "KL reference mean has length {} but the family has dimension {d}",
            mean.len()
        )));
    }
    let half_log_var = 0.5 * var.ln();
    let mut value = 0.0;
    let mut grad = GradSpec::zeros(d);
    for j in 0..d {
        let e2r = (2.0 * params.rho[j]).exp();
        let diff = params.mu[j] - mean[j];
        value += -params.rho[j] + half_log_var + (e2r + diff * diff) / (2.0 * var) - 0.5;
        grad.mu[j] = diff / var;
        grad.rho[j] = -1.0 + e2r / var;
    }
    Ok((value, grad))
}

/// Single-sample reparameterized gradient of the guidance term
/// `−log p(y | m_{0|ℓ}(μ + e^ρ ⊙ z))` at a fixed draw `z`.
///
/// With `x = μ + e^ρ ⊙ z` and `g = ∇_{x₀} log p(y | x₀)` at `x₀ = m_{0|ℓ}(x)`,
/// the chain rule pulls `g` back through the denoiser once:
///
/// ```text
/// h = J_{m_{0|ℓ}}(x)ᵀ g
/// ∂/∂μ = −h          ∂/∂ρ = −h ⊙ (e^ρ ⊙ z)
/// ```
pub fn guidance_grad(
    denoiser: &dyn Denoiser,
    lik: &dyn Likelihood,
    ell: usize,
    params: &VariationalParams,
    z: &DVector<f64>,
) -> GradSpec {
    let x = params.apply(z);
    let g = lik.grad_loglik(&denoiser.value(ell, &x));
    let h = denoiser.vjp(ell, &x, &g);
    let d = params.dim();
    GradSpec {
        mu: -&h,
        rho: DVector::from_fn(d, |j, _| -h[j] * params.rho[j].exp() * z[j]),
    }
}

/// Gradient of the full per-step objective
/// `−log p(y | m_{0|ℓ}(·)) + KL(q ‖ N(ctx_mean, ctx_var·I))` at draw `z`.
pub fn total_grad(
    denoiser: &dyn Denoiser,
    lik: &dyn Likelihood,
    ell: usize,
    params: &VariationalParams,
    ctx_mean: &DVector<f64>,
    ctx_var: f64,
    z: &DVector<f64>,
) -> Result<GradSpec> {
    let mut grad = guidance_grad(denoiser, lik, ell, params, z);
    let (_, kl_grad) = kl_iso(params, ctx_mean, ctx_var)?;
    grad.mu += kl_grad.mu;
    grad.rho += kl_grad.rho;
    Ok(grad)
}

/// Gradient of the warm-start objective at draw `z`, refining a family over
/// `X₁` given the current midpoint state `x_ell` at index `ell ≥ 2`.
///
/// With `α_r = α_ℓ/α_1`, `v_r = 1 − α_r`, and `x₁ = μ̃ + e^ρ̃ ⊙ z`, the
/// objective combines the forward transition `q_{ℓ|1}`, the likelihood at
/// `x₁` itself, and the noised marginal `q_1`:
///
/// ```text
/// F = −Σ_j ρ̃_j + (‖x_ℓ − √α_r μ̃‖² + α_r Σ_j e^{2ρ̃_j})/(2 v_r)
///     − log p(y | x₁) − log q_1(x₁)
/// ∂F/∂μ̃  = (α_r μ̃ − √α_r x_ℓ)/v_r − s
/// ∂F/∂ρ̃_j = (−1 + α_r e^{2ρ̃_j}/v_r) − s_j e^{ρ̃_j} z_j
/// ```
///
/// where `s = ∇log p(y | x₁) + ∇log q_1(x₁)`.
pub fn warmstart_grad(
    denoiser: &dyn Denoiser,
    lik: &dyn Likelihood,
    schedule: &NoiseSchedule,
    ell: usize,
    x_ell: &DVector<f64>,
    params: &VariationalParams,
    z: &DVector<f64>,
) -> Result<GradSpec> {
    if ell < 2 {
        return Err(Error::Index(format!(
            "warm start refines X₁ from a strictly later index, got ℓ = {ell}"
        )));
    }
    if ell > schedule.n() {
        return Err(Error::Index(format!(
            "ℓ = {ell} exceeds n = {}",
            schedule.n()
        )));
    }
    let alpha_r = schedule.alpha(ell) / schedule.alpha(1);
    let v_r = 1.0 - alpha_r;
    let sqrt_alpha_r = alpha_r.sqrt();
    let x1 = params.apply(z);
    let s = lik.grad_loglik(&x1) + denoiser.score(1, &x1);
    let d = params.dim();
    Ok(GradSpec {
        mu: DVector::from_fn(d, |j, _| {
            (alpha_r * params.mu[j] - sqrt_alpha_r * x_ell[j]) / v_r - s[j]
        }),
        rho: DVector::from_fn(d, |j, _| {
            let e2r = (2.0 * params.rho[j]).exp();
            (-1.0 + alpha_r * e2r / v_r) - s[j] * params.rho[j].exp() * z[j]
        }),
    })
}

/// Adam state over the concatenated `(μ, ρ)` parameter vector.
///
/// Uses the standard bias-corrected moment estimates with `β₁ = 0.9`,
/// `β₂ = 0.999`, `ε = 10⁻⁸`. One state is created per diffusion step and
/// discarded afterwards.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: DVector<f64>,
    v: DVector<f64>,
    t: u32,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    /// Fresh state for a family of dimension `d`.
    pub fn new(d: usize) -> Self {
        Self {
            m: DVector::zeros(2 * d),
            v: DVector::zeros(2 * d),
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update of `params` along `grad` with learning rate `lr`.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut VariationalParams,
    grad: &GradSpec,
    lr: f64,
) {
    let d = params.dim();
    debug_assert_eq!(state.m.len(), 2 * d, "Adam state dimension mismatch");
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for idx in 0..2 * d {
        let g = if idx < d {
            grad.mu[idx]
        } else {
            grad.rho[idx - d]
        };
        state.m[idx] = state.beta1 * state.m[idx] + (1.0 - state.beta1) * g;
        state.v[idx] = state.beta2 * state.v[idx] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[idx] / bc1;
        let v_hat = state.v[idx] / bc2;
        let update = lr * m_hat / (v_hat.sqrt() + state.eps);
        if idx < d {
            params.mu[idx] -= update;
        } else {
            params.rho[idx - d] -= update;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::LinearGaussianLikelihood;
    use crate::priors::{GaussianMixturePrior, GmDenoiser};
    use crate::rng::{normal_vector, stream_rng};
    use crate::schedule::build_schedule;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn toy_setup() -> (NoiseSchedule, GmDenoiser, LinearGaussianLikelihood) {
        let schedule = build_schedule(1000, 1e-4, 0.02, 100).unwrap();
        let means = vec![
            DVector::from_vec(vec![1.0, -1.0, 0.5]),
            DVector::from_vec(vec![-2.0, 0.0, 1.0]),
        ];
        let prior =
            GaussianMixturePrior::new(vec![0.6, 0.4], means, vec![1.0, 0.8]).unwrap();
        let den = GmDenoiser::new(&prior, &schedule).unwrap();
        let mut rng = stream_rng(71, "a", &[]);
        let a = DMatrix::from_fn(2, 3, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        let lik =
            LinearGaussianLikelihood::new(a, DVector::from_vec(vec![0.4, -0.9]), 0.3).unwrap();
        (schedule, den, lik)
    }

    fn random_params(d: usize, seed: u64) -> VariationalParams {
        let mut rng = stream_rng(seed, "params", &[]);
        VariationalParams::new(
            normal_vector(&mut rng, d),
            normal_vector(&mut rng, d) * 0.3,
        )
        .unwrap()
    }

    #[test]
    fn kl_known_value() {
        // d = 1, μ − mean = 1, ρ = 0, var = 1 gives KL = 1/2.
        let p = VariationalParams::new(
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![0.0]),
        )
        .unwrap();
        let (v, _) = kl_iso(&p, &DVector::zeros(1), 1.0).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-14);
    }

    #[test]
    fn kl_vanishes_when_matched() {
        let var: f64 = 0.7;
        let mean = DVector::from_vec(vec![0.3, -1.2]);
        let rho = DVector::from_element(2, 0.5 * var.ln());
        let p = VariationalParams::new(mean.clone(), rho).unwrap();
        let (v, g) = kl_iso(&p, &mean, var).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-14);
        assert_relative_eq!(g.mu.norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(g.rho.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kl_rejects_bad_variance() {
        let p = random_params(2, 1);
        assert!(kl_iso(&p, &DVector::zeros(2), 0.0).is_err());
        assert!(kl_iso(&p, &DVector::zeros(2), -1.0).is_err());
        assert!(kl_iso(&p, &DVector::zeros(3), 1.0).is_err());
    }

    #[test]
    fn kl_grad_matches_finite_differences() {
        let p = random_params(3, 5);
        let mean = DVector::from_vec(vec![0.2, -0.4, 1.0]);
        let var = 0.6;
        let (_, g) = kl_iso(&p, &mean, var).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.mu[j] += h;
            pm.mu[j] -= h;
            let fd =
                (kl_iso(&pp, &mean, var).unwrap().0 - kl_iso(&pm, &mean, var).unwrap().0)
                    / (2.0 * h);
            assert_relative_eq!(g.mu[j], fd, max_relative = 1e-6, epsilon = 1e-9);

            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.rho[j] += h;
            pm.rho[j] -= h;
            let fd =
                (kl_iso(&pp, &mean, var).unwrap().0 - kl_iso(&pm, &mean, var).unwrap().0)
                    / (2.0 * h);
            assert_relative_eq!(g.rho[j], fd, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn guidance_grad_matches_finite_differences() {
        let (_, den, lik) = toy_setup();
        let p = random_params(3, 7);
        let mut rng = stream_rng(7, "z", &[]);
        let z = normal_vector(&mut rng, 3);
        let ell = 20;
        let g = guidance_grad(&den, &lik, ell, &p, &z);
        // The guidance objective at fixed z.
        let f = |params: &VariationalParams| -> f64 {
            use crate::likelihood::Likelihood;
            use crate::priors::Denoiser;
            -lik.loglik(&den.value(ell, &params.apply(&z)))
        };
        let h = 1e-6;
        for j in 0..3 {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.mu[j] += h;
            pm.mu[j] -= h;
            let fd = (f(&pp) - f(&pm)) / (2.0 * h);
            assert_relative_eq!(g.mu[j], fd, max_relative = 1e-4, epsilon = 1e-7);

            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.rho[j] += h;
            pm.rho[j] -= h;
            let fd = (f(&pp) - f(&pm)) / (2.0 * h);
            assert_relative_eq!(g.rho[j], fd, max_relative = 1e-4, epsilon = 1e-7);
        }
    }

    #[test]
    fn total_grad_is_guidance_plus_kl() {
        let (_, den, lik) = toy_setup();
        let p = random_params(3, 11);
        let mut rng = stream_rng(11, "z", &[]);
        let z = normal_vector(&mut rng, 3);
        let ctx_mean = normal_vector(&mut rng, 3);
        let ctx_var = 0.4;
        let total = total_grad(&den, &lik, 15, &p, &ctx_mean, ctx_var, &z).unwrap();
        let guide = guidance_grad(&den, &lik, 15, &p, &z);
        let (_, kl) = kl_iso(&p, &ctx_mean, ctx_var).unwrap();
        assert_relative_eq!((&total.mu - (&guide.mu + &kl.mu)).norm(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(
            (&total.rho - (&guide.rho + &kl.rho)).norm(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn warmstart_grad_matches_finite_differences() {
        let (schedule, den, lik) = toy_setup();
        let p = random_params(3, 13);
        let mut rng = stream_rng(13, "z", &[]);
        let z = normal_vector(&mut rng, 3);
        let x_ell = normal_vector(&mut rng, 3) * 1.5;
        let ell = 30;
        let g = warmstart_grad(&den, &lik, &schedule, ell, &x_ell, &p, &z).unwrap();
        let alpha_r = schedule.alpha(ell) / schedule.alpha(1);
        let v_r = 1.0 - alpha_r;
        // The hybrid objective at fixed z, using the mixture's log marginal.
        let f = |params: &VariationalParams| -> f64 {
            use crate::likelihood::Likelihood;
            let x1 = params.apply(&z);
            let mut quad = 0.0;
            let mut e2r_sum = 0.0;
            for j in 0..3 {
                let t = x_ell[j] - alpha_r.sqrt() * params.mu[j];
                quad += t * t;
                e2r_sum += (2.0 * params.rho[j]).exp();
            }
            -params.rho.sum() + (quad + alpha_r * e2r_sum) / (2.0 * v_r)
                - lik.loglik(&x1)
                - den.log_marginal(1, &x1)
        };
        let h = 1e-6;
        for j in 0..3 {
            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.mu[j] += h;
            pm.mu[j] -= h;
            let fd = (f(&pp) - f(&pm)) / (2.0 * h);
            assert_relative_eq!(g.mu[j], fd, max_relative = 1e-4, epsilon = 1e-6);

            let mut pp = p.clone();
            let mut pm = p.clone();
            pp.rho[j] += h;
            pm.rho[j] -= h;
            let fd = (f(&pp) - f(&pm)) / (2.0 * h);
            assert_relative_eq!(g.rho[j], fd, max_relative = 1e-4, epsilon = 1e-6);
        }
    }

    #[test]
    fn warmstart_rejects_low_index() {
        let (schedule, den, lik) = toy_setup();
        let p = random_params(3, 17);
        let z = DVector::zeros(3);
        let x_ell = DVector::zeros(3);
        assert!(warmstart_grad(&den, &lik, &schedule, 1, &x_ell, &p, &z).is_err());
        assert!(warmstart_grad(&den, &lik, &schedule, 0, &x_ell, &p, &z).is_err());
        assert!(warmstart_grad(&den, &lik, &schedule, 101, &x_ell, &p, &z).is_err());
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let mut p = VariationalParams::new(DVector::zeros(2), DVector::zeros(2)).unwrap();
        let mut state = AdamState::new(2);
        let grad = GradSpec {
            mu: DVector::from_vec(vec![3.0, -0.2]),
            rho: DVector::from_vec(vec![-5.0, 1e-3]),
        };
        adam_step(&mut state, &mut p, &grad, 0.1);
        // With t = 1 the update is −lr · g/(|g| + ε) ≈ −lr · sign(g).
        assert_relative_eq!(p.mu[0], -0.1, max_relative = 1e-6);
        assert_relative_eq!(p.mu[1], 0.1, max_relative = 1e-6);
        assert_relative_eq!(p.rho[0], 0.1, max_relative = 1e-6);
        assert_relative_eq!(p.rho[1], -0.1, max_relative = 1e-4);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let target_mu = DVector::from_vec(vec![1.5, -0.7]);
        let target_rho = DVector::from_vec(vec![-0.3, 0.2]);
        let mut p = VariationalParams::new(DVector::zeros(2), DVector::zeros(2)).unwrap();
        let mut state = AdamState::new(2);
        for _ in 0..2000 {
            let grad = GradSpec {
                mu: &p.mu - &target_mu,
                rho: &p.rho - &target_rho,
            };
            adam_step(&mut state, &mut p, &grad, 0.05);
        }
        assert!((p.mu - target_mu).norm() < 1e-4);
        assert!((p.rho - target_rho).norm() < 1e-4);
    }

    #[test]
    fn apply_and_sample_are_consistent() {
        let p = random_params(4, 19);
        let mut rng_a = stream_rng(19, "draw", &[]);
        let mut rng_b = stream_rng(19, "draw", &[]);
        let z = normal_vector(&mut rng_a, 4);
        let x = p.sample(&mut rng_b);
        assert_relative_eq!((x - p.apply(&z)).norm(), 0.0, epsilon = 1e-15);
    }
}
