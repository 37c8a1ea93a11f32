//! Closed-form analysis of the midpoint-guided sampler under a Gaussian
//! prior and linear-Gaussian likelihood.
//!
//! With `m_{0|k}(x) = L_k x + n_k` affine and the likelihood Gaussian, every
//! surrogate backward transition is itself Gaussian and affine,
//!
//! ```text
//! π̂_{k|k+1}(x_k | x_{k+1}) = N(x_k; M x_{k+1} + c, S)
//! ```
//!
//! so the marginals of the surrogate chain follow an exact moment recursion.
//! Comparing the recursed `(μ̂₀, Σ̂₀)` against the exact posterior in
//! Wasserstein-2 maps out how the sampler's bias depends on the midpoint
//! plan, without any Monte Carlo error.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::likelihood::{Likelihood, LinearGaussianLikelihood};
use crate::metrics::gaussian_w2;
use crate::priors::{gauss_exact_posterior, GaussianDenoiser, GaussianPrior};
use crate::rng::normal_vector;
use crate::schedule::{MidpointPlan, NoiseSchedule};

/// One affine-Gaussian backward transition
/// `X_k = M X_{k+1} + c + ε`, `ε ~ N(0, S)`.
#[derive(Debug, Clone)]
pub struct AffineTransition {
    /// Linear part `M`.
    pub m: DMatrix<f64>,
    /// Offset `c`.
    pub c: DVector<f64>,
    /// Noise covariance `S` (symmetric PSD).
    pub s: DMatrix<f64>,
}

/// Mean and covariance of the surrogate chain's final sample.
#[derive(Debug, Clone)]
pub struct SurrogateMoments {
    /// `μ̂₀`.
    pub mu: DVector<f64>,
    /// `Σ̂₀` (symmetric PSD).
    pub sigma: DMatrix<f64>,
}

/// Per-instance tables shared by every transition: the affine denoiser parts
/// `L_k`, `n_k` and the projected operators `A L_ℓ`, `(A L_ℓ)ᵀ(A L_ℓ)`,
/// `A n_ℓ` for all indices. Building them once makes a sweep over midpoint
/// plans cost only the per-step linear algebra.
struct OracleTables {
    l: Vec<DMatrix<f64>>,
    off: Vec<DVector<f64>>,
    al: Vec<DMatrix<f64>>,
    ata: Vec<DMatrix<f64>>,
    ab: Vec<DVector<f64>>,
}

impl OracleTables {
    fn new(
        prior: &GaussianPrior,
        lik: &LinearGaussianLikelihood,
        sched: &NoiseSchedule,
    ) -> Result<Self> {
        let den = GaussianDenoiser::new(prior, sched)?;
        let n = sched.n();
        let mut l = Vec::with_capacity(n + 1);
        let mut off = Vec::with_capacity(n + 1);
        let mut al = Vec::with_capacity(n + 1);
        let mut ata = Vec::with_capacity(n + 1);
        let mut ab = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let lk = den.linear_map(k);
            let nk = den.offset(k);
            let alk = lik.a() * &lk;
            ata.push(alk.transpose() * &alk);
            ab.push(lik.a() * &nk);
            al.push(alk);
            l.push(lk);
            off.push(nk);
        }
        Ok(Self {
            l,
            off,
            al,
            ata,
            ab,
        })
    }

    /// The transition `π̂_{k|k+1}` with midpoint `ell`.
    ///
    /// The optimum over the midpoint state, given `X_{k+1} = x`, is the
    /// Gaussian with precision `I/v_b + Â_ℓᵀÂ_ℓ/σ_y²` (where
    /// `Â_ℓ = A L_ℓ` and `v_b` is the variance of `q_{ℓ|0,k+1}`) and mean
    /// `M̃x + c̃`; pushing it through the bridge `q_{k|ℓ,k+1}` with weights
    /// `(a, b)` and variance `v_br` gives
    ///
    /// ```text
    /// M = a M̃ + b I,  c = a c̃,  S = a² Γ + v_br I
    /// ```
    fn transition(
        &self,
        lik: &LinearGaussianLikelihood,
        sched: &NoiseSchedule,
        ell: usize,
        k: usize,
    ) -> Result<AffineTransition> {
        let d = self.l[0].nrows();
        let s2 = lik.sigma_y() * lik.sigma_y();
        let init = sched.bridge_params(0, ell, k + 1)?;
        // The conditional mean of the midpoint given x_{k+1} under the
        // surrogate: H x + h with H = w_lo L_{k+1} + w_hi I, h = w_lo n_{k+1}.
        let mut h_mat = &self.l[k + 1] * init.w_lo;
        for i in 0..d {
            h_mat[(i, i)] += init.w_hi;
        }
        let h_vec = &self.off[k + 1] * init.w_lo;
        let v_b = init.var;

        let mut prec = &self.ata[ell] / s2;
        for i in 0..d {
            prec[(i, i)] += 1.0 / v_b;
        }
        let chol = Cholesky::new(prec).ok_or_else(|| {
            Error::Numeric("midpoint posterior precision is not positive definite".to_string())
        })?;
        let gamma = chol.inverse();
        let m_tilde = chol.solve(&h_mat) / v_b;
        let rhs = &h_vec / v_b + self.al[ell].transpose() * (lik.y() - &self.ab[ell]) / s2;
        let c_tilde = chol.solve(&rhs);

        let adv = sched.bridge_params(ell, k, k + 1)?;
        let mut m = m_tilde * adv.w_lo;
        for i in 0..d {
            m[(i, i)] += adv.w_hi;
        }
        let mut s = gamma * (adv.w_lo * adv.w_lo);
        for i in 0..d {
            s[(i, i)] += adv.var;
        }
        Ok(AffineTransition {
            m,
            c: c_tilde * adv.w_lo,
            s,
        })
    }

    /// Iterate the affine recursion from `(0, I)` at index `n` down to the
    /// moments of `X₀`.
    fn recursion(
        &self,
        lik: &LinearGaussianLikelihood,
        sched: &NoiseSchedule,
        plan: &MidpointPlan,
    ) -> Result<SurrogateMoments> {
        let n = sched.n();
        let d = self.l[0].nrows();
        let mut mu = DVector::zeros(d);
        let mut sigma = DMatrix::identity(d, d);
        for k in (1..n).rev() {
            let t = self.transition(lik, sched, plan.ell(k), k)?;
            mu = &t.m * mu + &t.c;
            sigma = &t.m * sigma * t.m.transpose() + &t.s;
            // Symmetrize so eigendecompositions downstream stay clean.
            sigma = (&sigma + sigma.transpose()) * 0.5;
        }
        let mu0 = &self.l[1] * mu + &self.off[1];
        let sigma0 = &self.l[1] * sigma * self.l[1].transpose();
        Ok(SurrogateMoments {
            mu: mu0,
            sigma: (&sigma0 + sigma0.transpose()) * 0.5,
        })
    }
}

fn check_instance(
    prior: &GaussianPrior,
    lik: &LinearGaussianLikelihood,
    sched: &NoiseSchedule,
    plan: Option<&MidpointPlan>,
) -> Result<()> {
    if lik.a().ncols() != prior.mean().len() {
        return Err(Error::Parameter(format!(
            "operator has {} columns but prior has dimension {}",
            lik.a().ncols(),
            prior.mean().len()
        )));
    }
    if let Some(p) = plan {
        if p.n() != sched.n() {
            return Err(Error::Parameter(format!(
                "plan has n = {} but the schedule has n = {}",
                p.n(),
                sched.n()
            )));
        }
    }
    Ok(())
}

/// The exact affine backward transition `π̂_{k|k+1}` of the surrogate chain
/// at step `k` under `plan`.
///
/// Valid for `k ∈ [1, n−1]`. See [`run_moment_recursion`] for the recursion
/// built on these transitions.
pub fn surrogate_transition(
    k: usize,
    plan: &MidpointPlan,
    prior: &GaussianPrior,
    lik: &LinearGaussianLikelihood,
    sched: &NoiseSchedule,
) -> Result<AffineTransition> {
    check_instance(prior, lik, sched, Some(plan))?;
    if k < 1 || k >= sched.n() {
        return Err(Error::Index(format!(
            "transition index must lie in [1, {}], got {k}",
            sched.n() - 1
        )));
    }
    let tables = OracleTables::new(prior, lik, sched)?;
    tables.transition(lik, sched, plan.ell(k), k)
}

/// Exact moments `(μ̂₀, Σ̂₀)` of the surrogate chain's final sample.
///
/// Starts from `(0, I)` at index `n`, applies the affine transitions down to
/// index 1, then the deterministic final map `X₀ = m_{0|1}(X₁) = L₁X₁ + n₁`:
///
/// ```text
/// μ̂_k = M μ̂_{k+1} + c        Σ̂_k = M Σ̂_{k+1} Mᵀ + S
/// μ̂₀ = L₁ μ̂₁ + n₁           Σ̂₀ = L₁ Σ̂₁ L₁ᵀ
/// ```
pub fn run_moment_recursion(
    plan: &MidpointPlan,
    prior: &GaussianPrior,
    lik: &LinearGaussianLikelihood,
    sched: &NoiseSchedule,
) -> Result<SurrogateMoments> {
    check_instance(prior, lik, sched, Some(plan))?;
    let tables = OracleTables::new(prior, lik, sched)?;
    tables.recursion(lik, sched, plan)
}

/// The W2-versus-η landscape of one instance.
///
/// For each `η` builds the proportional midpoint plan, runs the moment
/// recursion, and evaluates the Gaussian Wasserstein-2 distance to the exact
/// posterior. Returns the `(η, W2)` pairs in input order together with the
/// minimizing `η*` (the first minimizer on ties).
pub fn w2_landscape(
    prior: &GaussianPrior,
    lik: &LinearGaussianLikelihood,
    sched: &NoiseSchedule,
    etas: &[f64],
) -> Result<(Vec<(f64, f64)>, f64)> {
    check_instance(prior, lik, sched, None)?;
    if etas.is_empty() {
        return Err(Error::Parameter("need at least one η".to_string()));
    }
    let (post_mean, post_cov) = gauss_exact_posterior(prior, lik)?;
    let tables = OracleTables::new(prior, lik, sched)?;
    let mut out = Vec::with_capacity(etas.len());
    let mut best = (f64::INFINITY, f64::NAN);
    for &eta in etas {
        let plan = MidpointPlan::proportional(sched.n(), eta)?;
        let moments = tables.recursion(lik, sched, &plan)?;
        let w2 = gaussian_w2(&post_mean, &post_cov, &moments.mu, &moments.sigma)?;
        if w2 < best.0 {
            best = (w2, eta);
        }
        out.push((eta, w2));
    }
    Ok((out, best.1))
}

/// Internals of one random instance draw, kept separate so tests can check
/// the construction.
struct InstanceParts {
    mean: DVector<f64>,
    g: DMatrix<f64>,
    lambda_bar_sq: f64,
    a: DMatrix<f64>,
    sigma_y: f64,
    y: DVector<f64>,
}

fn sample_instance_parts<R: Rng + ?Sized>(d: usize, rng: &mut R) -> InstanceParts {
    let mean = normal_vector(rng, d);
    let mut g = DMatrix::from_fn(d, d, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    for j in 0..d {
        let norm = g.column(j).norm();
        for i in 0..d {
            g[(i, j)] /= norm;
        }
    }
    // Mean squared singular value of G; exactly 1 after column normalization,
    // computed rather than assumed.
    let lambda_bar_sq = g.norm_squared() / d as f64;
    let dy = rng.random_range(d.div_ceil(10)..=d);
    let a = DMatrix::from_fn(dy, d, |_, _| {
        rng.sample::<f64, _>(rand_distr::StandardNormal)
    });
    let sigma_y = 0.1 + 0.4 * rng.random::<f64>();
    // y = A x* + σ_y ε with x* drawn from the prior.
    let z_star = normal_vector(rng, d);
    let x_star = &mean + (&g * &z_star) + normal_vector(rng, d) * lambda_bar_sq.sqrt();
    let y = &a * x_star + normal_vector(rng, dy) * sigma_y;
    InstanceParts {
        mean,
        g,
        lambda_bar_sq,
        a,
        sigma_y,
        y,
    }
}

/// Draw one random benchmark instance: a Gaussian prior with covariance
/// `λ̄²I + GGᵀ` (columns of `G` normalized, `λ̄²` their mean squared
/// singular value), an observation operator with i.i.d. standard normal
/// entries and `d_y ~ U⟦⌈d/10⌉, d⟧` rows, noise level `σ_y ~ U[0.1, 0.5]`,
/// and an observation generated from a prior draw. Requires `d ≥ 10`.
pub fn sample_random_instance<R: Rng + ?Sized>(
    d: usize,
    rng: &mut R,
) -> Result<(GaussianPrior, LinearGaussianLikelihood)> {
    if d < 10 {
        return Err(Error::Parameter(format!(
            "instance generation needs d ≥ 10, got {d}"
        )));
    }
    let parts = sample_instance_parts(d, rng);
    let cov = DMatrix::identity(d, d) * parts.lambda_bar_sq + &parts.g * parts.g.transpose();
    let prior = GaussianPrior::new(parts.mean, cov)?;
    let lik = LinearGaussianLikelihood::new(parts.a, parts.y, parts.sigma_y)?;
    Ok((prior, lik))
}
