//! Observation models for inverse problems `y = f(x) + σ_y ε`, `ε ~ N(0, I)`.
//!
//! A likelihood exposes its log-density and gradient in `x`,
//!
//! ```text
//! log p(y | x) = −‖y − f(x)‖² / (2σ_y²) − (d_y/2) log(2πσ_y²)
//! ```
//!
//! together with the residual `y − f(x)`. Two forward maps are provided:
//! linear `f(x) = Ax` and elementwise magnitude `f(x) = |Ax|`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A differentiable observation log-density `log p(y | x)`.
pub trait Likelihood {
    /// Dimension of the latent state `x`.
    fn dim(&self) -> usize;

    /// Dimension of the observation `y`.
    fn obs_dim(&self) -> usize;

    /// `log p(y | x)`.
    fn loglik(&self, x: &DVector<f64>) -> f64;

    /// `∇_x log p(y | x)`.
    fn grad_loglik(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Residual `y − f(x)` under the forward map.
    fn residual(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Observation noise level `σ_y`.
    fn sigma_y(&self) -> f64;
}

fn check_observation(a: &DMatrix<f64>, y: &DVector<f64>, sigma_y: f64) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::Parameter(format!(
            "operator has {} rows but observation has length {}",
            a.nrows(),
            y.len()
        )));
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Parameter("observation operator must be non-empty".to_string()));
    }
    if !(sigma_y > 0.0) {
        return Err(Error::Parameter(format!("σ_y must be positive, got {sigma_y}")));
    }
    Ok(())
}

/// Gaussian log-normalizer `−(d_y/2) log(2πσ_y²)`.
fn log_normalizer(obs_dim: usize, sigma_y: f64) -> f64 {
    -0.5 * obs_dim as f64 * (2.0 * std::f64::consts::PI * sigma_y * sigma_y).ln()
}

/// Linear-Gaussian observation `y = Ax + σ_y ε`.
#[derive(Debug, Clone)]
pub struct LinearGaussianLikelihood {
    a: DMatrix<f64>,
    y: DVector<f64>,
    sigma_y: f64,
    log_norm: f64,
}

impl LinearGaussianLikelihood {
    /// Build the likelihood; fails on shape mismatch or `σ_y ≤ 0`.
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, sigma_y: f64) -> Result<Self> {
        check_observation(&a, &y, sigma_y)?;
        let log_norm = log_normalizer(y.len(), sigma_y);
        Ok(Self {
            a,
            y,
            sigma_y,
            log_norm,
        })
    }

    /// The observation operator `A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The observation `y`.
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}

impl Likelihood for LinearGaussianLikelihood {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn obs_dim(&self) -> usize {
        self.a.nrows()
    }

    fn loglik(&self, x: &DVector<f64>) -> f64 {
        let r = self.residual(x);
        -0.5 * r.norm_squared() / (self.sigma_y * self.sigma_y) + self.log_norm
    }

    fn grad_loglik(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = self.residual(x);
        self.a.transpose() * r / (self.sigma_y * self.sigma_y)
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.y - &self.a * x
    }

    fn sigma_y(&self) -> f64 {
        self.sigma_y
    }
}

/// Magnitude observation `y = |Ax| + σ_y ε`, elementwise absolute value.
///
/// The gradient uses the subgradient convention `sign(0) = 0`.
#[derive(Debug, Clone)]
pub struct MagnitudeLikelihood {
    a: DMatrix<f64>,
    y: DVector<f64>,
    sigma_y: f64,
    log_norm: f64,
}

impl MagnitudeLikelihood {
    /// Build the likelihood; fails on shape mismatch or `σ_y ≤ 0`.
    pub fn new(a: DMatrix<f64>, y: DVector<f64>, sigma_y: f64) -> Result<Self> {
        check_observation(&a, &y, sigma_y)?;
        let log_norm = log_normalizer(y.len(), sigma_y);
        Ok(Self {
            a,
            y,
            sigma_y,
            log_norm,
        })
    }

    /// The observation operator `A`.
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The observation `y`.
    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}

impl Likelihood for MagnitudeLikelihood {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn obs_dim(&self) -> usize {
        self.a.nrows()
    }

    fn loglik(&self, x: &DVector<f64>) -> f64 {
        let r = self.residual(x);
        -0.5 * r.norm_squared() / (self.sigma_y * self.sigma_y) + self.log_norm
    }

    fn grad_loglik(&self, x: &DVector<f64>) -> DVector<f64> {
        let ax = &self.a * x;
        let weighted = DVector::from_fn(ax.len(), |i, _| {
            let s = if ax[i] > 0.0 {
                1.0
            } else if ax[i] < 0.0 {
                -1.0
            } else {
                0.0
            };
            s * (self.y[i] - ax[i].abs())
        });
        self.a.transpose() * weighted / (self.sigma_y * self.sigma_y)
    }

    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let ax = &self.a * x;
        DVector::from_fn(self.y.len(), |i, _| self.y[i] - ax[i].abs())
    }

    fn sigma_y(&self) -> f64 {
        self.sigma_y
    }
}
