//! Analytic priors with exact denoisers, and their closed-form posteriors
//! under linear-Gaussian observations.
//!
//! For a prior `p(x₀)` pushed through the forward process, the noised
//! marginal at coarse index `k` is `q_k(x) = ∫ N(x; √α_k x₀, v_k I) p(x₀) dx₀`
//! and the exact denoiser is the conditional mean
//!
//! ```text
//! m_{0|k}(x) = E[X₀ | X_k = x] = (x + v_k ∇log q_k(x)) / √α_k
//! ```
//!
//! Both priors here admit closed forms for `q_k`, its score, `m_{0|k}`, and
//! the Jacobian of `m_{0|k}`, so samplers can be validated against exact
//! quantities instead of a trained network.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::likelihood::{Likelihood, LinearGaussianLikelihood};
use crate::rng::normal_vector;
use crate::schedule::NoiseSchedule;

/// Relative tolerance for symmetry of a user-supplied covariance.
const SYMMETRY_TOL: f64 = 1e-10;

/// An exact denoiser of a diffusion prior on a fixed schedule.
///
/// Implementations expose the conditional mean `m_{0|k}`, the score of the
/// noised marginal `∇log q_k`, and a vector-Jacobian product against the
/// denoiser. Both denoisers in this crate have symmetric Jacobians, so the
/// product coincides with the Jacobian-vector product.
pub trait Denoiser {
    /// State dimension `d`.
    fn dim(&self) -> usize;

    /// Number of coarse steps `n` of the underlying schedule.
    fn n_steps(&self) -> usize;

    /// `m_{0|k}(x)`, the posterior mean of `X₀` given `X_k = x`.
    fn value(&self, k: usize, x: &DVector<f64>) -> DVector<f64>;

    /// `J_{m_{0|k}}(x)ᵀ u`, the gradient pullback through the denoiser.
    fn vjp(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `∇log q_k(x)`, the score of the noised marginal.
    fn score(&self, k: usize, x: &DVector<f64>) -> DVector<f64>;
}

/// A Gaussian prior `N(m, Σ)` with full covariance.
///
/// The covariance is eigendecomposed once at construction; the denoiser and
/// the exact posterior reuse the factors.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    q: DMatrix<f64>,
    lambdas: DVector<f64>,
}

impl GaussianPrior {
    /// Build the prior; fails unless `cov` is square, symmetric to relative
    /// `1e-10`, matches the mean's dimension, and is positive definite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::Parameter(format!(
                "covariance is {}×{} but mean has length {d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if d == 0 {
            return Err(Error::Parameter("prior dimension must be positive".to_string()));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in (i + 1)..d {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Parameter(format!(
                        "covariance is not symmetric at ({i}, {j}): {} vs {}",
                        cov[(i, j)],
                        cov[(j, i)]
                    )));
                }
            }
        }
        let eig = cov.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Parameter(
                "covariance must be positive definite".to_string(),
            ));
        }
        Ok(Self {
            mean,
            cov,
            q: eig.eigenvectors,
            lambdas: eig.eigenvalues,
        })
    }

    /// The prior mean.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// The prior covariance.
    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub(crate) fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub(crate) fn eigenvalues(&self) -> &DVector<f64> {
        &self.lambdas
    }

    /// Draw one sample `m + Q Λ^{1/2} z`, `z ~ N(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = normal_vector(rng, self.mean.len());
        let scaled = DVector::from_fn(z.len(), |i, _| self.lambdas[i].sqrt() * z[i]);
        &self.mean + &self.q * scaled
    }
}

/// Exact denoiser of a [`GaussianPrior`] on a [`NoiseSchedule`].
///
/// In the eigenbasis `Σ = Q Λ Qᵀ` the noised marginal at index `k` is
/// Gaussian with covariance `Q diag(α_k λ_i + v_k) Qᵀ`, and
///
/// ```text
/// m_{0|k}(x) = L_k x + n_k
/// L_k = Q diag(a_ki) Qᵀ,  a_ki = √α_k λ_i / (α_k λ_i + v_k)
/// n_k = Q diag(b_ki) Qᵀ m, b_ki = v_k / (α_k λ_i + v_k)
/// ```
///
/// The per-index coefficient vectors are cached at construction.
#[derive(Debug, Clone)]
pub struct GaussianDenoiser {
    q: DMatrix<f64>,
    qt_mean: DVector<f64>,
    mean: DVector<f64>,
    alphas: Vec<f64>,
    d: usize,
    n: usize,
    /// Row-major `[(n+1) × d]`: `a[k*d + i]`.
    a: Vec<f64>,
    /// Row-major `[(n+1) × d]`: `b[k*d + i]`.
    b: Vec<f64>,
    /// Row-major `[(n+1) × d]`: `1 / (α_k λ_i + v_k)`.
    inv_denom: Vec<f64>,
}

impl GaussianDenoiser {
    /// Cache the denoising coefficients of `prior` on `schedule`.
    pub fn new(prior: &GaussianPrior, schedule: &NoiseSchedule) -> Result<Self> {
        let d = prior.mean().len();
        let n = schedule.n();
        let lambdas = prior.eigenvalues();
        let mut a = vec![0.0; (n + 1) * d];
        let mut b = vec![0.0; (n + 1) * d];
        let mut inv_denom = vec![0.0; (n + 1) * d];
        for k in 0..=n {
            let alpha = schedule.alpha(k);
            let v = schedule.v(k);
            let sqrt_alpha = alpha.sqrt();
            for i in 0..d {
                let denom = alpha * lambdas[i] + v;
                let inv = 1.0 / denom;
                a[k * d + i] = sqrt_alpha * lambdas[i] * inv;
                b[k * d + i] = v * inv;
                inv_denom[k * d + i] = inv;
            }
        }
        Ok(Self {
            q: prior.eigenvectors().clone(),
            qt_mean: prior.eigenvectors().transpose() * prior.mean(),
            mean: prior.mean().clone(),
            alphas: schedule.alphas().to_vec(),
            d,
            n,
            a,
            b,
            inv_denom,
        })
    }

    fn coeff<'a>(&self, table: &'a [f64], k: usize) -> &'a [f64] {
        &table[k * self.d..(k + 1) * self.d]
    }

    /// Dense `L_k` with `m_{0|k}(x) = L_k x + n_k`.
    pub fn linear_map(&self, k: usize) -> DMatrix<f64> {
        debug_assert!(k <= self.n);
        let ak = self.coeff(&self.a, k);
        let scaled = DMatrix::from_fn(self.d, self.d, |i, j| self.q[(i, j)] * ak[j]);
        scaled * self.q.transpose()
    }

    /// Dense `n_k` with `m_{0|k}(x) = L_k x + n_k`.
    pub fn offset(&self, k: usize) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let bk = self.coeff(&self.b, k);
        let scaled = DVector::from_fn(self.d, |i, _| bk[i] * self.qt_mean[i]);
        &self.q * scaled
    }
}

impl Denoiser for GaussianDenoiser {
    fn dim(&self) -> usize {
        self.d
    }

    fn n_steps(&self) -> usize {
        self.n
    }

    fn value(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let ak = self.coeff(&self.a, k);
        let bk = self.coeff(&self.b, k);
        let mut w = self.q.transpose() * x;
        for i in 0..self.d {
            w[i] = ak[i] * w[i] + bk[i] * self.qt_mean[i];
        }
        &self.q * w
    }

    fn vjp(&self, k: usize, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let ak = self.coeff(&self.a, k);
        let mut w = self.q.transpose() * u;
        for i in 0..self.d {
            w[i] *= ak[i];
        }
        &self.q * w
    }

    fn score(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let inv = self.coeff(&self.inv_denom, k);
        let sqrt_alpha = self.alphas[k].sqrt();
        let centered = x - &self.mean * sqrt_alpha;
        let mut w = self.q.transpose() * centered;
        for i in 0..self.d {
            w[i] *= -inv[i];
        }
        &self.q * w
    }
}

/// An isotropic Gaussian mixture prior `Σ_i w_i N(m_i, σ_i² I)`.
#[derive(Debug, Clone)]
pub struct GaussianMixturePrior {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    sigmas: Vec<f64>,
    dim: usize,
}

impl GaussianMixturePrior {
    /// Build the mixture. Weights must be positive and finite; they are
    /// normalized to sum to one. All means must share a dimension and all
    /// `σ_i` must be positive.
    pub fn new(weights: Vec<f64>, means: Vec<DVector<f64>>, sigmas: Vec<f64>) -> Result<Self> {
        let c = weights.len();
        if c == 0 || means.len() != c || sigmas.len() != c {
            return Err(Error::Parameter(format!(
                "mixture needs matching non-empty weights/means/sigmas, got {c}/{}/{}",
                means.len(),
                sigmas.len()
            )));
        }
        let dim = means[0].len();
        if dim == 0 {
            return Err(Error::Parameter("mixture dimension must be positive".to_string()));
        }
        if means.iter().any(|m| m.len() != dim) {
            return Err(Error::Parameter("mixture means have mixed dimensions".to_string()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Parameter(
                "mixture weights must be positive and finite".to_string(),
            ));
        }
        if sigmas.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Parameter(
                "mixture σ_i must be positive and finite".to_string(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            means,
            sigmas,
            dim,
        })
    }

    /// Number of components.
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Normalized component weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Component means.
    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    /// Component standard deviations.
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Draw one sample: pick a component by weight, then `m_i + σ_i z`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let i = pick_component(&self.weights, rng);
        &self.means[i] + normal_vector(rng, self.dim) * self.sigmas[i]
    }
}

/// Inverse-CDF draw of a component index from normalized weights.
fn pick_component<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Exact denoiser of a [`GaussianMixturePrior`] on a [`NoiseSchedule`].
///
/// The noised marginal stays a mixture,
///
/// ```text
/// q_k(x) = Σ_i w_i N(x; √α_k m_i, γ_ki I),  γ_ki = α_k σ_i² + v_k
/// ```
///
/// so score, denoiser, and Jacobian reduce to responsibility-weighted sums:
///
/// ```text
/// g_i = (√α_k m_i − x) / γ_ki          ḡ = Σ_i r_i(x) g_i
/// m_{0|k}(x) = (x + v_k ḡ) / √α_k
/// H = ∇²log q_k = −(Σ_i r_i/γ_ki) I + Σ_i r_i g_i g_iᵀ − ḡ ḡᵀ
/// J_{m_{0|k}} = (I + v_k H) / √α_k
/// ```
///
/// Scaled means and per-component coefficients are cached per index so the
/// per-call work is plain loops over slices; the Hessian is never
/// materialized (only its action on a vector).
#[derive(Debug, Clone)]
pub struct GmDenoiser {
    d: usize,
    n: usize,
    c: usize,
    alphas: Vec<f64>,
    /// Row-major `[(n+1) × c × d]`: `√α_k m_i`.
    scaled_means: Vec<f64>,
    /// Row-major `[(n+1) × c]`: `1 / γ_ki`.
    inv_gamma: Vec<f64>,
    /// Row-major `[(n+1) × c]`: `log w_i − (d/2) log(2π γ_ki)`.
    log_coeff: Vec<f64>,
}

impl GmDenoiser {
    /// Cache the per-index tables of `prior` on `schedule`.
    pub fn new(prior: &GaussianMixturePrior, schedule: &NoiseSchedule) -> Result<Self> {
        let d = prior.dim();
        let c = prior.n_components();
        let n = schedule.n();
        let mut scaled_means = vec![0.0; (n + 1) * c * d];
        let mut inv_gamma = vec![0.0; (n + 1) * c];
        let mut log_coeff = vec![0.0; (n + 1) * c];
        let two_pi = 2.0 * std::f64::consts::PI;
        for k in 0..=n {
            let alpha = schedule.alpha(k);
            let v = schedule.v(k);
            let sqrt_alpha = alpha.sqrt();
            for i in 0..c {
                let gamma = alpha * prior.sigmas()[i] * prior.sigmas()[i] + v;
                inv_gamma[k * c + i] = 1.0 / gamma;
                log_coeff[k * c + i] =
                    prior.weights()[i].ln() - 0.5 * d as f64 * (two_pi * gamma).ln();
                let dst = (k * c + i) * d;
                let m = &prior.means()[i];
                for j in 0..d {
                    scaled_means[dst + j] = sqrt_alpha * m[j];
                }
            }
        }
        Ok(Self {
            d,
            n,
            c,
            alphas: schedule.alphas().to_vec(),
            scaled_means,
            inv_gamma,
            log_coeff,
        })
    }

    /// Responsibilities `r_i(x)` at index `k`, via log-sum-exp.
    fn responsibilities(&self, k: usize, x: &DVector<f64>) -> Vec<f64> {
        let mut logs = vec![0.0; self.c];
        let mut max = f64::NEG_INFINITY;
        for i in 0..self.c {
            let sm = &self.scaled_means[(k * self.c + i) * self.d..(k * self.c + i + 1) * self.d];
            let mut sq = 0.0;
            for j in 0..self.d {
                let t = x[j] - sm[j];
                sq += t * t;
            }
            let l = self.log_coeff[k * self.c + i] - 0.5 * sq * self.inv_gamma[k * self.c + i];
            logs[i] = l;
            if l > max {
                max = l;
            }
        }
        let mut z = 0.0;
        for l in logs.iter_mut() {
            *l = (*l - max).exp();
            z += *l;
        }
        for l in logs.iter_mut() {
            *l /= z;
        }
        logs
    }

    /// `log q_k(x)` of the noised mixture marginal.
    pub fn log_marginal(&self, k: usize, x: &DVector<f64>) -> f64 {
        debug_assert!(k <= self.n);
        let mut max = f64::NEG_INFINITY;
        let mut logs = vec![0.0; self.c];
        for i in 0..self.c {
            let sm = &self.scaled_means[(k * self.c + i) * self.d..(k * self.c + i + 1) * self.d];
            let mut sq = 0.0;
            for j in 0..self.d {
                let t = x[j] - sm[j];
                sq += t * t;
            }
            logs[i] = self.log_coeff[k * self.c + i] - 0.5 * sq * self.inv_gamma[k * self.c + i];
            if logs[i] > max {
                max = logs[i];
            }
        }
        max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
    }
}

impl Denoiser for GmDenoiser {
    fn dim(&self) -> usize {
        self.d
    }

    fn n_steps(&self) -> usize {
        self.n
    }

    fn value(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let v = 1.0 - self.alphas[k];
        let inv_sqrt_alpha = 1.0 / self.alphas[k].sqrt();
        let g = self.score(k, x);
        DVector::from_fn(self.d, |j, _| (x[j] + v * g[j]) * inv_sqrt_alpha)
    }

    fn vjp(&self, k: usize, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let r = self.responsibilities(k, x);
        let v = 1.0 - self.alphas[k];
        let inv_sqrt_alpha = 1.0 / self.alphas[k].sqrt();
        // H u accumulated without materializing any g_i.
        let mut g_bar = vec![0.0; self.d];
        let mut hu = vec![0.0; self.d];
        let mut trace_coeff = 0.0;
        for i in 0..self.c {
            let ig = self.inv_gamma[k * self.c + i];
            let sm = &self.scaled_means[(k * self.c + i) * self.d..(k * self.c + i + 1) * self.d];
            trace_coeff += r[i] * ig;
            let mut diff_dot_u = 0.0;
            for j in 0..self.d {
                diff_dot_u += (sm[j] - x[j]) * u[j];
            }
            let w_g = r[i] * ig;
            let w_h = r[i] * ig * ig * diff_dot_u;
            for j in 0..self.d {
                let diff = sm[j] - x[j];
                g_bar[j] += w_g * diff;
                hu[j] += w_h * diff;
            }
        }
        let mut gbar_dot_u = 0.0;
        for j in 0..self.d {
            gbar_dot_u += g_bar[j] * u[j];
        }
        DVector::from_fn(self.d, |j, _| {
            let h = -trace_coeff * u[j] + hu[j] - g_bar[j] * gbar_dot_u;
            (u[j] + v * h) * inv_sqrt_alpha
        })
    }

    fn score(&self, k: usize, x: &DVector<f64>) -> DVector<f64> {
        debug_assert!(k <= self.n);
        let r = self.responsibilities(k, x);
        let mut g = DVector::zeros(self.d);
        for i in 0..self.c {
            let w = r[i] * self.inv_gamma[k * self.c + i];
            let sm = &self.scaled_means[(k * self.c + i) * self.d..(k * self.c + i + 1) * self.d];
            for j in 0..self.d {
                g[j] += w * (sm[j] - x[j]);
            }
        }
        g
    }
}

/// Exact posterior of a [`GaussianPrior`] under a linear-Gaussian likelihood.
///
/// Returns `(m_y, Σ_y)` with
///
/// ```text
/// Σ_y = (Σ⁻¹ + AᵀA/σ_y²)⁻¹
/// m_y = Σ_y (Aᵀy/σ_y² + Σ⁻¹m)
/// ```
pub fn gauss_exact_posterior(
    prior: &GaussianPrior,
    lik: &LinearGaussianLikelihood,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let d = prior.mean().len();
    if lik.a().ncols() != d {
        return Err(Error::Parameter(format!(
            "operator has {} columns but prior has dimension {d}",
            lik.a().ncols()
        )));
    }
    let q = prior.eigenvectors();
    let inv_lam = DVector::from_fn(d, |i, _| 1.0 / prior.eigenvalues()[i]);
    let scaled = DMatrix::from_fn(d, d, |i, j| q[(i, j)] * inv_lam[j]);
    let precision_prior = &scaled * q.transpose();
    let s2 = lik.sigma_y() * lik.sigma_y();
    let precision = &precision_prior + lik.a().transpose() * lik.a() / s2;
    let chol = Cholesky::new(precision)
        .ok_or_else(|| Error::Numeric("posterior precision is not positive definite".to_string()))?;
    let rhs = lik.a().transpose() * lik.y() / s2 + &precision_prior * prior.mean();
    let mean = chol.solve(&rhs);
    let cov = chol.inverse();
    Ok((mean, cov))
}

/// Exact posterior of a [`GaussianMixturePrior`] under a linear-Gaussian
/// likelihood: again a Gaussian mixture, with one covariance per distinct
/// prior component scale.
#[derive(Debug, Clone)]
pub struct GaussianMixturePosterior {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    /// Component `i` uses `covs[cov_of[i]]`.
    cov_of: Vec<usize>,
    covs: Vec<DMatrix<f64>>,
    /// Lower Cholesky factors of `covs`, same indexing.
    factors: Vec<DMatrix<f64>>,
}

impl GaussianMixturePosterior {
    /// Posterior component weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior component means.
    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    /// Posterior covariance of component `i`.
    pub fn cov(&self, i: usize) -> &DMatrix<f64> {
        &self.covs[self.cov_of[i]]
    }

    /// Number of components.
    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    /// State dimension.
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// Number of distinct covariance matrices held.
    pub fn n_distinct_covs(&self) -> usize {
        self.covs.len()
    }

    /// Mean of the whole mixture.
    pub fn mixture_mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for i in 0..self.weights.len() {
            m += &self.means[i] * self.weights[i];
        }
        m
    }

    /// Covariance of the whole mixture,
    /// `Σ_i w_i (Σ̄_i + m̄_i m̄_iᵀ) − m m ᵀ`.
    pub fn mixture_cov(&self) -> DMatrix<f64> {
        let m = self.mixture_mean();
        let d = self.dim();
        let mut cov = DMatrix::zeros(d, d);
        for i in 0..self.weights.len() {
            cov += (self.cov(i) + &self.means[i] * self.means[i].transpose()) * self.weights[i];
        }
        cov - &m * m.transpose()
    }

    /// Draw one sample: pick a component by posterior weight, then
    /// `m̄_i + F_i z` with `F_i` the Cholesky factor of its covariance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let i = pick_component(&self.weights, rng);
        let z = normal_vector(rng, self.dim());
        &self.means[i] + &self.factors[self.cov_of[i]] * z
    }
}

/// Compute the exact mixture posterior under `y = Ax + σ_y ε`.
///
/// Component `i` of the posterior has
///
/// ```text
/// w̄_i ∝ w_i N(y; A m_i, σ_y² I + σ_i² A Aᵀ)
/// Σ̄_i = ((1/σ_i²) I + AᵀA/σ_y²)⁻¹
/// m̄_i = Σ̄_i (Aᵀy/σ_y² + m_i/σ_i²)
/// ```
///
/// Weights are normalized in log space. Covariances depend on `σ_i` only, so
/// one matrix (and one Cholesky factorization) is computed per distinct
/// `σ_i` value and shared across components.
pub fn gm_exact_posterior(
    prior: &GaussianMixturePrior,
    lik: &LinearGaussianLikelihood,
) -> Result<GaussianMixturePosterior> {
    let d = prior.dim();
    if lik.a().ncols() != d {
        return Err(Error::Parameter(format!(
            "operator has {} columns but prior has dimension {d}",
            lik.a().ncols()
        )));
    }
    let c = prior.n_components();
    let dy = lik.a().nrows();
    let s2 = lik.sigma_y() * lik.sigma_y();
    let ata = lik.a().transpose() * lik.a();
    let aat = lik.a() * lik.a().transpose();
    let at_y = lik.a().transpose() * lik.y() / s2;

    // Distinct σ values, state-space posteriors, and obs-space marginals.
    let mut distinct: Vec<f64> = Vec::new();
    let mut cov_of = vec![0usize; c];
    for i in 0..c {
        let s = prior.sigmas()[i];
        match distinct.iter().position(|&t| t == s) {
            Some(p) => cov_of[i] = p,
            None => {
                cov_of[i] = distinct.len();
                distinct.push(s);
            }
        }
    }
    let mut covs = Vec::with_capacity(distinct.len());
    let mut factors = Vec::with_capacity(distinct.len());
    let mut marginal_chols = Vec::with_capacity(distinct.len());
    let mut marginal_logdets = Vec::with_capacity(distinct.len());
    for &sigma in &distinct {
        let prec = DMatrix::identity(d, d) / (sigma * sigma) + &ata / s2;
        let chol = Cholesky::new(prec).ok_or_else(|| {
            Error::Numeric("posterior component precision is not positive definite".to_string())
        })?;
        let cov = chol.inverse();
        let factor = Cholesky::new(cov.clone())
            .ok_or_else(|| {
                Error::Numeric("posterior component covariance lost definiteness".to_string())
            })?
            .l();
        covs.push(cov);
        factors.push(factor);

        let marg = DMatrix::identity(dy, dy) * s2 + &aat * (sigma * sigma);
        let mchol = Cholesky::new(marg).ok_or_else(|| {
            Error::Numeric("observation marginal covariance is not positive definite".to_string())
        })?;
        let logdet = 2.0 * (0..dy).map(|i| mchol.l()[(i, i)].ln()).sum::<f64>();
        marginal_chols.push(mchol);
        marginal_logdets.push(logdet);
    }

    let log_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut log_w = vec![0.0; c];
    let mut means = Vec::with_capacity(c);
    for i in 0..c {
        let p = cov_of[i];
        let resid = lik.y() - lik.a() * &prior.means()[i];
        let solved = marginal_chols[p].solve(&resid);
        let quad = resid.dot(&solved);
        log_w[i] = prior.weights()[i].ln()
            - 0.5 * (quad + marginal_logdets[p] + dy as f64 * log_2pi);
        let rhs = &at_y + &prior.means()[i] / (distinct[p] * distinct[p]);
        means.push(&covs[p] * rhs);
    }
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for lw in log_w.iter_mut() {
        *lw = (*lw - max).exp();
        z += *lw;
    }
    let weights: Vec<f64> = log_w.into_iter().map(|w| w / z).collect();

    Ok(GaussianMixturePosterior {
        weights,
        means,
        cov_of,
        covs,
        factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::schedule::build_schedule;
    use approx::assert_relative_eq;

    fn schedule() -> NoiseSchedule {
        build_schedule(1000, 1e-4, 0.02, 100).unwrap()
    }

    fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream_rng(seed, "spd", &[]);
        let g = DMatrix::from_fn(d, d, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        &g * g.transpose() + DMatrix::identity(d, d) * 0.5
    }

    fn toy_gaussian(d: usize, seed: u64) -> GaussianPrior {
        let mut rng = stream_rng(seed, "mean", &[]);
        let mean = normal_vector(&mut rng, d);
        GaussianPrior::new(mean, random_spd(d, seed)).unwrap()
    }

    fn toy_mixture(d: usize) -> GaussianMixturePrior {
        let means = vec![
            DVector::from_fn(d, |i, _| i as f64 - 1.0),
            DVector::from_fn(d, |i, _| -(i as f64)),
            DVector::from_fn(d, |i, _| 0.5 * i as f64 + 0.2),
        ];
        GaussianMixturePrior::new(vec![0.5, 0.3, 0.2], means, vec![1.0, 0.7, 1.3]).unwrap()
    }

    #[test]
    fn gaussian_prior_validation() {
        let mut cov = random_spd(3, 1);
        cov[(0, 1)] += 1e-4;
        assert!(GaussianPrior::new(DVector::zeros(3), cov).is_err());
        let mut cov = random_spd(3, 2);
        cov[(2, 2)] = -1.0;
        cov[(0, 2)] = 0.0;
        cov[(2, 0)] = 0.0;
        cov[(1, 2)] = 0.0;
        cov[(2, 1)] = 0.0;
        assert!(GaussianPrior::new(DVector::zeros(3), cov).is_err());
        assert!(GaussianPrior::new(DVector::zeros(2), random_spd(3, 3)).is_err());
    }

    #[test]
    fn gaussian_denoiser_is_identity_at_zero() {
        let prior = toy_gaussian(4, 7);
        let den = GaussianDenoiser::new(&prior, &schedule()).unwrap();
        let mut rng = stream_rng(7, "x", &[]);
        let x = normal_vector(&mut rng, 4);
        assert_relative_eq!((den.value(0, &x) - &x).norm(), 0.0, epsilon = 1e-12);
        let u = normal_vector(&mut rng, 4);
        assert_relative_eq!((den.vjp(0, &x, &u) - &u).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_score_matches_dense_formula() {
        let prior = toy_gaussian(5, 9);
        let s = schedule();
        let den = GaussianDenoiser::new(&prior, &s).unwrap();
        let mut rng = stream_rng(9, "x", &[]);
        for &k in &[1usize, 17, 60, 100] {
            let x = normal_vector(&mut rng, 5) * 2.0;
            // ∇log q_k(x) = −(α_k Σ + v_k I)⁻¹ (x − √α_k m)
            let marg = prior.cov() * s.alpha(k) + DMatrix::identity(5, 5) * s.v(k);
            let expected = -Cholesky::new(marg)
                .unwrap()
                .solve(&(&x - prior.mean() * s.alpha(k).sqrt()));
            assert_relative_eq!((den.score(k, &x) - expected).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gaussian_tweedie_identity() {
        let prior = toy_gaussian(5, 11);
        let s = schedule();
        let den = GaussianDenoiser::new(&prior, &s).unwrap();
        let mut rng = stream_rng(11, "x", &[]);
        for &k in &[3usize, 40, 100] {
            let x = normal_vector(&mut rng, 5);
            let via_score = (&x + den.score(k, &x) * s.v(k)) / s.alpha(k).sqrt();
            assert_relative_eq!((den.value(k, &x) - via_score).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gaussian_affine_decomposition_matches_value() {
        let prior = toy_gaussian(4, 13);
        let den = GaussianDenoiser::new(&prior, &schedule()).unwrap();
        let mut rng = stream_rng(13, "x", &[]);
        for &k in &[0usize, 5, 77] {
            let x = normal_vector(&mut rng, 4);
            let via_affine = den.linear_map(k) * &x + den.offset(k);
            assert_relative_eq!((den.value(k, &x) - via_affine).norm(), 0.0, epsilon = 1e-12);
            let u = normal_vector(&mut rng, 4);
            let via_map = den.linear_map(k).transpose() * &u;
            assert_relative_eq!((den.vjp(k, &x, &u) - via_map).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gaussian_prior_sample_moments() {
        let prior = toy_gaussian(3, 17);
        let mut rng = stream_rng(17, "draws", &[]);
        let n = 200_000;
        let mut mean = DVector::zeros(3);
        let mut cov = DMatrix::zeros(3, 3);
        for _ in 0..n {
            let x = prior.sample(&mut rng);
            mean += &x;
            cov += &x * x.transpose();
        }
        mean /= n as f64;
        cov = cov / n as f64 - &mean * mean.transpose();
        assert!((mean - prior.mean()).norm() < 0.05, "sample mean off");
        assert!((cov - prior.cov()).norm() < 0.1, "sample covariance off");
    }

    #[test]
    fn mixture_validation() {
        let means = vec![DVector::zeros(2), DVector::zeros(2)];
        assert!(GaussianMixturePrior::new(vec![1.0], means.clone(), vec![1.0, 1.0]).is_err());
        assert!(
            GaussianMixturePrior::new(vec![1.0, -1.0], means.clone(), vec![1.0, 1.0]).is_err()
        );
        assert!(GaussianMixturePrior::new(vec![1.0, 1.0], means.clone(), vec![1.0, 0.0]).is_err());
        let mixed = vec![DVector::zeros(2), DVector::zeros(3)];
        assert!(GaussianMixturePrior::new(vec![1.0, 1.0], mixed, vec![1.0, 1.0]).is_err());
        let p = GaussianMixturePrior::new(vec![2.0, 6.0], means, vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(p.weights()[0], 0.25);
        assert_relative_eq!(p.weights()[1], 0.75);
    }

    #[test]
    fn gm_denoiser_is_identity_at_zero() {
        let prior = toy_mixture(3);
        let den = GmDenoiser::new(&prior, &schedule()).unwrap();
        let mut rng = stream_rng(23, "x", &[]);
        let x = normal_vector(&mut rng, 3);
        assert_relative_eq!((den.value(0, &x) - &x).norm(), 0.0, epsilon = 1e-12);
        let u = normal_vector(&mut rng, 3);
        assert_relative_eq!((den.vjp(0, &x, &u) - &u).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gm_value_matches_conditional_mean_form() {
        // Tweedie form vs responsibility-weighted conditional means
        // m_i + (σ_i² √α_k / γ_ki)(x − √α_k m_i).
        let prior = toy_mixture(3);
        let s = schedule();
        let den = GmDenoiser::new(&prior, &s).unwrap();
        let mut rng = stream_rng(29, "x", &[]);
        for &k in &[1usize, 33, 100] {
            let x = normal_vector(&mut rng, 3) * 2.0;
            let r = den.responsibilities(k, &x);
            let mut expected = DVector::zeros(3);
            for i in 0..prior.n_components() {
                let sig2 = prior.sigmas()[i] * prior.sigmas()[i];
                let gamma = s.alpha(k) * sig2 + s.v(k);
                let cond = &prior.means()[i]
                    + (&x - &prior.means()[i] * s.alpha(k).sqrt())
                        * (sig2 * s.alpha(k).sqrt() / gamma);
                expected += cond * r[i];
            }
            assert_relative_eq!((den.value(k, &x) - expected).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gm_score_matches_log_marginal_gradient() {
        let prior = toy_mixture(2);
        let den = GmDenoiser::new(&prior, &schedule()).unwrap();
        let mut rng = stream_rng(31, "x", &[]);
        let h = 1e-6;
        for &k in &[2usize, 50, 100] {
            let x = normal_vector(&mut rng, 2) * 1.5;
            let g = den.score(k, &x);
            for j in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (den.log_marginal(k, &xp) - den.log_marginal(k, &xm)) / (2.0 * h);
                assert_relative_eq!(g[j], fd, max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn gm_vjp_matches_directional_derivative() {
        let prior = toy_mixture(3);
        let den = GmDenoiser::new(&prior, &schedule()).unwrap();
        let mut rng = stream_rng(37, "x", &[]);
        let h = 1e-6;
        for &k in &[5usize, 60] {
            let x = normal_vector(&mut rng, 3);
            let u = normal_vector(&mut rng, 3);
            // The Jacobian is symmetric, so Jᵀu equals the directional
            // derivative of the value along u.
            let fd = (den.value(k, &(&x + &u * h)) - den.value(k, &(&x - &u * h))) / (2.0 * h);
            assert_relative_eq!((den.vjp(k, &x, &u) - fd).norm(), 0.0, epsilon = 1e-5);
        }
    }

    #[test]
    fn single_component_mixture_matches_gaussian() {
        let d = 3;
        let mean = DVector::from_vec(vec![0.4, -1.0, 2.0]);
        let sigma = 0.8;
        let gm = GaussianMixturePrior::new(vec![1.0], vec![mean.clone()], vec![sigma]).unwrap();
        let gauss =
            GaussianPrior::new(mean, DMatrix::identity(d, d) * sigma * sigma).unwrap();
        let s = schedule();
        let gm_den = GmDenoiser::new(&gm, &s).unwrap();
        let g_den = GaussianDenoiser::new(&gauss, &s).unwrap();
        let mut rng = stream_rng(41, "x", &[]);
        for &k in &[0usize, 10, 100] {
            let x = normal_vector(&mut rng, d) * 2.0;
            let u = normal_vector(&mut rng, d);
            assert_relative_eq!(
                (gm_den.value(k, &x) - g_den.value(k, &x)).norm(),
                0.0,
                epsilon = 1e-9
            );
            assert_relative_eq!(
                (gm_den.score(k, &x) - g_den.score(k, &x)).norm(),
                0.0,
                epsilon = 1e-9
            );
            assert_relative_eq!(
                (gm_den.vjp(k, &x, &u) - g_den.vjp(k, &x, &u)).norm(),
                0.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn gauss_posterior_identity_case() {
        // Σ = I, A = I, σ_y = 1 collapses to Σ_y = I/2, m_y = (y + m)/2.
        let d = 4;
        let mean = DVector::from_fn(d, |i, _| i as f64);
        let prior = GaussianPrior::new(mean.clone(), DMatrix::identity(d, d)).unwrap();
        let y = DVector::from_fn(d, |i, _| -(i as f64) + 1.0);
        let lik =
            LinearGaussianLikelihood::new(DMatrix::identity(d, d), y.clone(), 1.0).unwrap();
        let (m_y, cov_y) = gauss_exact_posterior(&prior, &lik).unwrap();
        assert_relative_eq!((m_y - (&y + &mean) * 0.5).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            (cov_y - DMatrix::identity(d, d) * 0.5).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn gauss_posterior_with_zero_operator_is_prior() {
        let prior = toy_gaussian(4, 43);
        let lik =
            LinearGaussianLikelihood::new(DMatrix::zeros(2, 4), DVector::zeros(2), 0.3).unwrap();
        let (m_y, cov_y) = gauss_exact_posterior(&prior, &lik).unwrap();
        assert_relative_eq!((m_y - prior.mean()).norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!((cov_y - prior.cov()).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn gm_posterior_shares_covariances_per_distinct_sigma() {
        let means = vec![DVector::zeros(3), DVector::zeros(3), DVector::zeros(3)];
        let prior =
            GaussianMixturePrior::new(vec![1.0, 1.0, 1.0], means, vec![0.5, 1.0, 0.5]).unwrap();
        let mut rng = stream_rng(47, "a", &[]);
        let a = DMatrix::from_fn(2, 3, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        let lik = LinearGaussianLikelihood::new(a, DVector::from_vec(vec![1.0, -1.0]), 0.2)
            .unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        assert_eq!(post.n_distinct_covs(), 2);
        assert_eq!(post.cov(0), post.cov(2));
        assert_ne!(post.cov(0), post.cov(1));
    }

    #[test]
    fn gm_posterior_with_weak_observation_recovers_prior() {
        let prior = toy_mixture(3);
        let mut rng = stream_rng(53, "a", &[]);
        let a = DMatrix::from_fn(2, 3, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        let lik =
            LinearGaussianLikelihood::new(a, DVector::from_vec(vec![0.5, 0.5]), 1e6).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        for i in 0..prior.n_components() {
            assert_relative_eq!(post.weights()[i], prior.weights()[i], max_relative = 1e-4);
            assert_relative_eq!(
                (post.means()[i].clone() - &prior.means()[i]).norm(),
                0.0,
                epsilon = 1e-4
            );
            let sig2 = prior.sigmas()[i] * prior.sigmas()[i];
            assert_relative_eq!(
                (post.cov(i) - DMatrix::identity(3, 3) * sig2).norm(),
                0.0,
                epsilon = 1e-4
            );
        }
    }

    #[test]
    fn gm_posterior_sample_moments() {
        let prior = toy_mixture(2);
        let mut rng = stream_rng(59, "a", &[]);
        let a = DMatrix::from_fn(1, 2, |_, _| {
            rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)
        });
        let lik = LinearGaussianLikelihood::new(a, DVector::from_vec(vec![0.7]), 0.5).unwrap();
        let post = gm_exact_posterior(&prior, &lik).unwrap();
        let n = 200_000;
        let mut mean = DVector::zeros(2);
        let mut cov = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let x = post.sample(&mut rng);
            mean += &x;
            cov += &x * x.transpose();
        }
        mean /= n as f64;
        cov = cov / n as f64 - &mean * mean.transpose();
        assert!((mean - post.mixture_mean()).norm() < 0.05);
        assert!((cov - post.mixture_cov()).norm() < 0.1);
    }
}
