//! Closed-form embedding distances for Gaussian laws under the Gaussian
//! kernel, and the plug-in estimator built on them.
//!
//! For `P = N(m_p, v_p)`, `Q = N(m_q, v_q)` and kernel bandwidth `s2`,
//! `E k(X, X') = sqrt(s2 / (s2 + v_p + v_q')) exp(-(m_p - m_q')^2 / (2 (s2 + v_p + v_q')))`
//! for independent `X ~ P`, `X' ~ Q'`, from which the RKHS distance between
//! the two mean embeddings follows by expanding the squared norm.

use alloc::format;

use crate::data::Dataset;
use crate::error::{Error, Result};

fn check_bandwidth(sigma_sq: f64) -> Result<()> {
    if !(sigma_sq.is_finite() && sigma_sq > 0.0) {
        return Err(Error::InvalidConfig(format!("bandwidth_sq must be positive, got {sigma_sq}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    mean: f64,
    variance: f64,
}

impl Gaussian1D {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidConfig(format!("mean must be finite, got {mean}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidConfig(format!("variance must be positive, got {variance}")));
        }
        Ok(Gaussian1D { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

fn expected_kernel_1d(p: Gaussian1D, q: Gaussian1D, sigma_sq: f64) -> f64 {
    let s = sigma_sq + p.variance + q.variance;
    let d = p.mean - q.mean;
    libm::sqrt(sigma_sq / s) * libm::exp(-d * d / (2.0 * s))
}

/// RKHS distance between the kernel mean embeddings of two univariate Gaussians.
pub fn mmd_gaussians(p: Gaussian1D, q: Gaussian1D, sigma_sq: f64) -> Result<f64> {
    check_bandwidth(sigma_sq)?;
    if p == q {
        return Ok(0.0);
    }
    let sq = expected_kernel_1d(p, p, sigma_sq) + expected_kernel_1d(q, q, sigma_sq)
        - 2.0 * expected_kernel_1d(p, q, sigma_sq);
    Ok(libm::sqrt(sq.max(0.0)))
}

/// SCMD between `X -> Y` models with `Y = a X + e` and `Y = b X + e`, both
/// with standard normal `X` and `e`, at `do(X = x)`. Intervening on `Y`
/// leaves `X ~ N(0, 1)` in both, so only one term remains.
pub fn scmd_case1(a: f64, b: f64, x: f64, sigma_sq: f64) -> Result<f64> {
    mmd_gaussians(Gaussian1D::new(a * x, 1.0)?, Gaussian1D::new(b * x, 1.0)?, sigma_sq)
}

/// SCMD between the model `X -> Y` with `Y = a X + e` and its reversal
/// `Y -> X` that induces the same joint law, at `do(X = x)` and `do(Y = y)`.
pub fn scmd_case2(a: f64, x: f64, y: f64, sigma_sq: f64) -> Result<f64> {
    let t = 1.0 + a * a;
    let on_x = mmd_gaussians(Gaussian1D::new(a * x, 1.0)?, Gaussian1D::new(0.0, t)?, sigma_sq)?;
    let on_y = mmd_gaussians(Gaussian1D::new(0.0, 1.0)?, Gaussian1D::new(a * y / t, 1.0 / t)?, sigma_sq)?;
    Ok(on_x + on_y)
}

/// Bivariate Gaussian with a positive-definite covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2D {
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
}

impl Gaussian2D {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite Gaussian parameter".into()));
        }
        if cov[0][1] != cov[1][0] {
            return Err(Error::InvalidConfig("covariance is not symmetric".into()));
        }
        let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[1][0];
        if !(cov[0][0] > 0.0 && det > 0.0) {
            return Err(Error::InvalidConfig("covariance is not positive definite".into()));
        }
        Ok(Gaussian2D { mean, cov })
    }

    pub fn mean(&self) -> [f64; 2] {
        self.mean
    }

    pub fn cov(&self) -> [[f64; 2]; 2] {
        self.cov
    }
}

/// `E exp(-|D|^2 / (2 s2))` for `D ~ N(p.mean - q.mean, p.cov + q.cov)`:
/// `det(I + S / s2)^(-1/2) exp(-d^T (s2 I + S)^(-1) d / 2)`.
fn expected_kernel_2d(p: &Gaussian2D, q: &Gaussian2D, sigma_sq: f64) -> f64 {
    let a = sigma_sq + p.cov[0][0] + q.cov[0][0];
    let b = p.cov[0][1] + q.cov[0][1];
    let c = sigma_sq + p.cov[1][1] + q.cov[1][1];
    let det = a * c - b * b;
    let d0 = p.mean[0] - q.mean[0];
    let d1 = p.mean[1] - q.mean[1];
    let quad = (c * d0 * d0 - 2.0 * b * d0 * d1 + a * d1 * d1) / det;
    sigma_sq / libm::sqrt(det) * libm::exp(-0.5 * quad)
}

/// RKHS distance between bivariate Gaussians under the product Gaussian kernel.
pub fn mmd_joint_bivariate(p: &Gaussian2D, q: &Gaussian2D, sigma_sq: f64) -> Result<f64> {
    check_bandwidth(sigma_sq)?;
    if p == q {
        return Ok(0.0);
    }
    let sq = expected_kernel_2d(p, p, sigma_sq) + expected_kernel_2d(q, q, sigma_sq)
        - 2.0 * expected_kernel_2d(p, q, sigma_sq);
    Ok(libm::sqrt(sq.max(0.0)))
}

/// Causal direction assumed for the second dataset by [`plugin_scmd`]; the
/// first dataset is always fitted as `X -> Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PluginCase {
    /// Both datasets `X -> Y`.
    SameDirection,
    /// Second dataset `Y -> X`.
    Reversed,
}

/// Least-squares fit of `response = intercept + slope * regressor + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual variance with `n - 2` degrees of freedom.
    pub residual_variance: f64,
    pub regressor_mean: f64,
    /// Regressor variance with `n - 1` degrees of freedom.
    pub regressor_variance: f64,
}

impl LinearFit {
    pub fn fit(regressor: &[f64], response: &[f64]) -> Result<Self> {
        let n = regressor.len();
        if n != response.len() {
            return Err(Error::ShapeMismatch {
                expected: (n, 1),
                found: (response.len(), 1),
            });
        }
        if n < 3 {
            return Err(Error::InvalidData(format!("linear fit needs at least 3 samples, got {n}")));
        }
        let nf = n as f64;
        let mx = regressor.iter().sum::<f64>() / nf;
        let my = response.iter().sum::<f64>() / nf;
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for (x, y) in regressor.iter().zip(response) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        if sxx.is_nan() || sxx <= 0.0 {
            return Err(Error::InvalidData("regressor has zero variance".into()));
        }
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ssr: f64 = regressor
            .iter()
            .zip(response)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        Ok(LinearFit {
            intercept,
            slope,
            residual_variance: ssr / (nf - 2.0),
            regressor_mean: mx,
            regressor_variance: sxx / (nf - 1.0),
        })
    }

    fn conditional(&self, at: f64) -> Result<Gaussian1D> {
        Gaussian1D::new(self.intercept + self.slope * at, self.residual_variance)
    }

    fn marginal(&self) -> Result<Gaussian1D> {
        Gaussian1D::new(self.regressor_mean, self.regressor_variance)
    }
}

/// SCMD of two bivariate datasets (columns `X`, `Y`) obtained by fitting
/// linear-Gaussian models and evaluating the closed form at `do(X = x)` and
/// `do(Y = y)`.
pub fn plugin_scmd(d1: &Dataset, d2: &Dataset, case: PluginCase, x: f64, y: f64, sigma_sq: f64) -> Result<f64> {
    check_bandwidth(sigma_sq)?;
    for d in [d1, d2] {
        if d.n_variables() != 2 {
            return Err(Error::InvalidData(format!(
                "plug-in estimator needs exactly two variables, `{}` has {}",
                d.id(),
                d.n_variables()
            )));
        }
    }
    let fit1 = LinearFit::fit(d1.column("X")?, d1.column("Y")?)?;
    match case {
        PluginCase::SameDirection => {
            let fit2 = LinearFit::fit(d2.column("X")?, d2.column("Y")?)?;
            Ok(mmd_gaussians(fit1.conditional(x)?, fit2.conditional(x)?, sigma_sq)?
                + mmd_gaussians(fit1.marginal()?, fit2.marginal()?, sigma_sq)?)
        }
        PluginCase::Reversed => {
            let fit2 = LinearFit::fit(d2.column("Y")?, d2.column("X")?)?;
            Ok(mmd_gaussians(fit1.conditional(x)?, fit2.marginal()?, sigma_sq)?
                + mmd_gaussians(fit1.marginal()?, fit2.conditional(y)?, sigma_sq)?)
        }
    }
}
