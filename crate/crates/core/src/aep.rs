//! 1-in-T annual exceedance probability values and their delta-method
//! standard errors.

use crate::distributions::{gev_reduced_quantile, GevParams, GpdParams, XI_SWITCH};
use crate::error::{Error, Result};
use crate::fitting::{Covariance, FitResult};
use serde::{Deserialize, Serialize};

/// Below this `|ξ·log y|` the shape derivative uses its series expansion.
const SERIES_SWITCH: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AepEstimate {
    pub period: f64,
    pub value: f64,
    /// `None` when the fit has no usable covariance.
    pub se: Option<f64>,
    /// `se / value`; `None` when either is unavailable or `value <= 0`.
    pub relative_uncertainty: Option<f64>,
}

fn check_period(period: f64) -> Result<()> {
    if period > 1.0 && period.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("return period must be > 1 year, got {period}")))
    }
}

/// `-log(1 - 1/T)`.
#[inline]
fn neg_log_nonexceedance(period: f64) -> f64 {
    -(-1.0 / period).ln_1p()
}

/// Quantile of the annual-maximum GEV at non-exceedance probability `1 - 1/T`.
pub fn return_level(p: &GevParams, period: f64) -> Result<f64> {
    check_period(period)?;
    p.validate()?;
    Ok(p.mu + p.sigma * gev_reduced_quantile(p.xi, neg_log_nonexceedance(period)))
}

/// Partial derivatives `(∂z/∂μ, ∂z/∂σ, ∂z/∂ξ)` of the 1-in-T value.
pub fn return_level_gradient(p: &GevParams, period: f64) -> Result<[f64; 3]> {
    check_period(period)?;
    let l = neg_log_nonexceedance(period).ln();
    let xi = p.xi;
    let d_sigma = gev_reduced_quantile(xi, neg_log_nonexceedance(period));
    let d_xi = if xi.abs() < XI_SWITCH || (xi * l).abs() < SERIES_SWITCH {
        // σ·Σ_{k≥2} (−L)^k (k−1) ξ^(k−2) / k!
        let mut term_pow = l * l; // (−L)^k ξ^(k−2) for k = 2
        let mut fact = 2.0;
        let mut sum = 0.0;
        for k in 2..=7 {
            sum += term_pow * (k as f64 - 1.0) / fact;
            term_pow *= -l * xi;
            fact *= (k + 1) as f64;
        }
        p.sigma * sum
    } else {
        let y_neg_xi = (-xi * l).exp();
        -p.sigma / (xi * xi) * (y_neg_xi - 1.0) - p.sigma / xi * y_neg_xi * l
    };
    Ok([1.0, d_sigma, d_xi])
}

/// Delta-method standard error of the return level for a given covariance.
pub fn delta_method_se(p: &GevParams, cov: &Covariance, period: f64) -> Result<f64> {
    let g = return_level_gradient(p, period)?;
    Ok(cov.quadratic_form(&g).max(0.0).sqrt())
}

pub fn aep_with_uncertainty(fit: &FitResult, period: f64) -> Result<AepEstimate> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    let value = return_level(&fit.params, period)?;
    let se = match &fit.covariance {
        Some(c) => Some(delta_method_se(&fit.params, c, period)?),
        None => None,
    };
    let relative_uncertainty = match se {
        Some(se) if value > 0.0 => Some(se / value),
        _ => None,
    };
    Ok(AepEstimate { period, value, se, relative_uncertainty })
}

/// 1-in-T value from a GPD for excesses and a Poisson rate of exceedances
/// per year: `u + σ′/ξ[(λ/y)^ξ − 1]` with `y = −log(1 − 1/T)`.
pub fn gpd_poisson_return_level(gpd: &GpdParams, rate_per_year: f64, period: f64) -> Result<f64> {
    check_period(period)?;
    gpd.validate()?;
    if !(rate_per_year > 0.0) {
        return Err(Error::domain(format!("exceedance rate must be > 0, got {rate_per_year}")));
    }
    let log_ratio = (rate_per_year / neg_log_nonexceedance(period)).ln();
    let reduced = if gpd.xi.abs() < XI_SWITCH {
        log_ratio
    } else {
        (gpd.xi * log_ratio).exp_m1() / gpd.xi
    };
    Ok(gpd.threshold + gpd.sigma * reduced)
}
