//! Discrete noise schedule, forward transitions, bridge kernels, and midpoint
//! plans.
//!
//! The forward process runs on a coarse grid of `n + 1` indices with
//! coefficients `α_0 = 1 > α_1 > ... > α_n`, where
//!
//! ```text
//! q_{k|j}(x_k | x_j) = N(x_k; √(α_k/α_j) x_j, (1 − α_k/α_j) I)
//! ```
//!
//! for `j ≤ k`. Conditioning the chain at an intermediate index `ℓ` on its
//! values at `j` and `k` gives the Gaussian bridge
//!
//! ```text
//! q_{ℓ|j,k}(x_ℓ | x_j, x_k) = N(x_ℓ; w_lo·x_j + w_hi·x_k, var·I)
//! w_lo = √(α_ℓ/α_j)(1 − α_k/α_ℓ)/(1 − α_k/α_j)
//! w_hi = √(α_k/α_ℓ)(1 − α_ℓ/α_j)/(1 − α_k/α_j)
//! var  = (1 − α_ℓ/α_j)(1 − α_k/α_ℓ)/(1 − α_k/α_j)
//! ```
//!
//! A midpoint plan assigns to every backward step `k+1 → k` the intermediate
//! index `ℓ_k ∈ [1, k]` at which the likelihood approximation is applied.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::normal_vector;
use nalgebra::DVector;

/// Largest admissible terminal coefficient; beyond this the chain does not
/// end close enough to a standard normal for backward sampling to start from
/// `N(0, I)`.
const ALPHA_FINAL_MAX: f64 = 1e-3;

/// The coarse α-grid of a diffusion model together with derived quantities.
///
/// Invariants enforced at construction: `α_0 = 1` exactly, `α` strictly
/// decreasing, every `α_k ∈ (0, 1]`, and `α_n ≤ 10⁻³`.
#[derive(Debug, Clone)]
pub struct NoiseSchedule {
    n: usize,
    alphas: Vec<f64>,
    vs: Vec<f64>,
    t_grid: Vec<usize>,
}

impl NoiseSchedule {
    /// Build a schedule from explicit α values (`alphas[k]` for `k = 0..=n`).
    ///
    /// The fine-grid indices default to `0..=n`. Fails unless `α_0 = 1`,
    /// `α` is strictly decreasing in `(0, 1]`, and `α_n ≤ 10⁻³`.
    pub fn from_alphas(alphas: Vec<f64>) -> Result<Self> {
        let n = alphas.len().checked_sub(1).ok_or_else(|| {
            Error::Parameter("schedule needs at least the k = 0 entry".to_string())
        })?;
        if n == 0 {
            return Err(Error::Parameter(
                "schedule needs at least one step beyond k = 0".to_string(),
            ));
        }
        if alphas[0] != 1.0 {
            return Err(Error::Parameter(format!(
                "α_0 must be exactly 1, got {}",
                alphas[0]
            )));
        }
        for k in 1..=n {
            if !(alphas[k] > 0.0 && alphas[k] < alphas[k - 1]) {
                return Err(Error::Parameter(format!(
                    "α must be strictly decreasing in (0, 1]; α_{} = {} after α_{} = {}",
                    k,
                    alphas[k],
                    k - 1,
                    alphas[k - 1]
                )));
            }
        }
        if alphas[n] > ALPHA_FINAL_MAX {
            return Err(Error::Parameter(format!(
                "α_n = {} exceeds {ALPHA_FINAL_MAX}; the chain must end near pure noise",
                alphas[n]
            )));
        }
        let vs = alphas.iter().map(|a| 1.0 - a).collect();
        let t_grid = (0..=n).collect();
        Ok(Self {
            n,
            alphas,
            vs,
            t_grid,
        })
    }

    /// Number of coarse steps `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `α_k`.
    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k]
    }

    /// `v_k = 1 − α_k`.
    pub fn v(&self, k: usize) -> f64 {
        self.vs[k]
    }

    /// Fine-grid index `t_k` underlying coarse index `k`.
    pub fn t(&self, k: usize) -> usize {
        self.t_grid[k]
    }

    /// All α values, `α_0..=α_n`.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k > self.n {
            return Err(Error::Index(format!("index {k} exceeds n = {}", self.n)));
        }
        Ok(())
    }

    /// Coefficients of the forward transition `q_{k|j}`: returns
    /// `(√(α_k/α_j), 1 − α_k/α_j)`.
    pub fn forward_coeffs(&self, j: usize, k: usize) -> Result<(f64, f64)> {
        self.check_index(k)?;
        if j > k {
            return Err(Error::Index(format!("forward transition needs j ≤ k, got j = {j}, k = {k}")));
        }
        let ratio = self.alphas[k] / self.alphas[j];
        Ok((ratio.sqrt(), 1.0 - ratio))
    }

    /// Parameters of the bridge kernel `q_{ell|j,k}` for `j ≤ ell ≤ k`, `j < k`.
    pub fn bridge_params(&self, j: usize, ell: usize, k: usize) -> Result<BridgeParams> {
        self.check_index(k)?;
        if !(j <= ell && ell <= k && j < k) {
            return Err(Error::Index(format!(
                "bridge needs j ≤ ell ≤ k with j < k, got ({j}, {ell}, {k})"
            )));
        }
        let r_lj = self.alphas[ell] / self.alphas[j];
        let r_kl = self.alphas[k] / self.alphas[ell];
        let r_kj = self.alphas[k] / self.alphas[j];
        let denom = 1.0 - r_kj;
        Ok(BridgeParams {
            w_lo: r_lj.sqrt() * (1.0 - r_kl) / denom,
            w_hi: r_kl.sqrt() * (1.0 - r_lj) / denom,
            var: (1.0 - r_lj) * (1.0 - r_kl) / denom,
        })
    }
}

/// Build the default linear-β schedule.
///
/// `β` is linearly spaced on `[beta_min, beta_max]` over `T` fine steps,
/// `ᾱ_t = Π_{s≤t}(1 − β_s)` with `ᾱ_0 = 1`, and the coarse grid subsamples
/// `0..=T` evenly into `n` steps via `t_k = ⌊kT/n⌋`, so `α_k = ᾱ_{t_k}`.
pub fn build_schedule(t_fine: usize, beta_min: f64, beta_max: f64, n: usize) -> Result<NoiseSchedule> {
    if !(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0) {
        return Err(Error::Parameter(format!(
            "need 0 < beta_min ≤ beta_max < 1, got [{beta_min}, {beta_max}]"
        )));
    }
    if n == 0 || n > t_fine {
        return Err(Error::Parameter(format!(
            "need 1 ≤ n ≤ T, got n = {n}, T = {t_fine}"
        )));
    }
    let mut alpha_bar = Vec::with_capacity(t_fine + 1);
    alpha_bar.push(1.0);
    let mut acc = 1.0;
    for s in 0..t_fine {
        let frac = if t_fine == 1 {
            0.0
        } else {
            s as f64 / (t_fine - 1) as f64
        };
        let beta = beta_min + (beta_max - beta_min) * frac;
        acc *= 1.0 - beta;
        alpha_bar.push(acc);
    }
    let t_grid: Vec<usize> = (0..=n).map(|k| k * t_fine / n).collect();
    let alphas: Vec<f64> = t_grid.iter().map(|&t| alpha_bar[t]).collect();
    let vs = alphas.iter().map(|a| 1.0 - a).collect();
    if alphas[n] > ALPHA_FINAL_MAX {
        return Err(Error::Parameter(format!(
            "terminal α_n = {} exceeds {ALPHA_FINAL_MAX}; increase T or β",
            alphas[n]
        )));
    }
    Ok(NoiseSchedule {
        n,
        alphas,
        vs,
        t_grid,
    })
}

/// Weights and variance of a Gaussian bridge kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeParams {
    /// Weight on the earlier (lower-index) state.
    pub w_lo: f64,
    /// Weight on the later (higher-index) state.
    pub w_hi: f64,
    /// Isotropic variance of the bridge.
    pub var: f64,
}

impl BridgeParams {
    /// The bridge mean `w_lo·x_lo + w_hi·x_hi`.
    pub fn mean(&self, x_lo: &DVector<f64>, x_hi: &DVector<f64>) -> Result<DVector<f64>> {
        if x_lo.len() != x_hi.len() {
            return Err(Error::Parameter(format!(
                "bridge endpoints have mismatched dimensions {} and {}",
                x_lo.len(),
                x_hi.len()
            )));
        }
        Ok(x_lo * self.w_lo + x_hi * self.w_hi)
    }

    /// Draw from the bridge: `w_lo·x_lo + w_hi·x_hi + √var·Z`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        x_lo: &DVector<f64>,
        x_hi: &DVector<f64>,
        rng: &mut R,
    ) -> Result<DVector<f64>> {
        let mut out = self.mean(x_lo, x_hi)?;
        if self.var > 0.0 {
            let sd = self.var.sqrt();
            out += normal_vector(rng, out.len()) * sd;
        }
        Ok(out)
    }
}

/// The midpoint index assigned to each backward step.
///
/// `ell(k)` is defined for `k ∈ [1, n]` with `ell(n) = n`, `ell(1) = 1`, and
/// `1 ≤ ell(k) ≤ k` throughout.
#[derive(Debug, Clone)]
pub struct MidpointPlan {
    ell: Vec<usize>,
    eta: Option<f64>,
}

impl MidpointPlan {
    /// The proportional rule `ℓ_k = clamp(⌊ηk⌋, 1, k)` for `k < n`, with
    /// `ℓ_n = n`.
    pub fn proportional(n: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::Parameter(format!("η must lie in [0, 1], got {eta}")));
        }
        if n < 1 {
            return Err(Error::Parameter("plan needs n ≥ 1".to_string()));
        }
        let mut ell = vec![0; n + 1];
        for k in 1..n {
            ell[k] = ((eta * k as f64).floor() as usize).clamp(1, k);
        }
        ell[n] = n;
        Ok(Self {
            ell,
            eta: Some(eta),
        })
    }

    /// An explicit sequence `ℓ_1..=ℓ_n` (index 0 of the argument is `ℓ_1`).
    ///
    /// Validates `ℓ_n = n`, `ℓ_1 = 1`, and `1 ≤ ℓ_k ≤ k`.
    pub fn from_sequence(seq: Vec<usize>) -> Result<Self> {
        let n = seq.len();
        if n < 1 {
            return Err(Error::Parameter("plan needs n ≥ 1".to_string()));
        }
        if seq[n - 1] != n {
            return Err(Error::Parameter(format!(
                "plan must end at ℓ_n = n = {n}, got {}",
                seq[n - 1]
            )));
        }
        if seq[0] != 1 {
            return Err(Error::Parameter(format!(
                "plan must start at ℓ_1 = 1, got {}",
                seq[0]
            )));
        }
        for (i, &l) in seq.iter().enumerate() {
            let k = i + 1;
            if l < 1 || l > k {
                return Err(Error::Parameter(format!(
                    "plan entry ℓ_{k} = {l} outside [1, {k}]"
                )));
            }
        }
        let mut ell = Vec::with_capacity(n + 1);
        ell.push(0);
        ell.extend(seq);
        Ok(Self { ell, eta: None })
    }

    /// Number of steps `n`.
    pub fn n(&self) -> usize {
        self.ell.len() - 1
    }

    /// Midpoint index for backward step `k` (valid for `k ∈ [1, n]`).
    pub fn ell(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k < self.ell.len());
        self.ell[k]
    }

    /// The η of a proportional plan, if that is how it was built.
    pub fn eta(&self) -> Option<f64> {
        self.eta
    }
}
