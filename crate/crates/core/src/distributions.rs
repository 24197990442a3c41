//! GEV and GPD families: densities, CDFs, quantiles, sampling and support.
//!
//! Powers of the form `(1 + ξz)^(-1/ξ)` are evaluated as `exp(-log1p(ξz)/ξ)`
//! and the Gumbel / exponential limits are used when `|ξ| < XI_SWITCH`.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Below this magnitude the shape is treated as exactly zero.
pub const XI_SWITCH: f64 = 1e-8;

/// Location, scale and shape of a generalized extreme value distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub mu: f64,
    pub sigma: f64,
    pub xi: f64,
}

/// Generalized Pareto distribution of excesses over `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub threshold: f64,
    pub sigma: f64,
    pub xi: f64,
}

/// Support of a distribution; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl SupportBounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower.is_none_or(|l| x >= l) && self.upper.is_none_or(|u| x <= u)
    }
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{what} must be finite, got {x}")))
    }
}

fn check_prob(prob: f64) -> Result<()> {
    if prob > 0.0 && prob < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("probability must lie in (0, 1), got {prob}")))
    }
}

/// `log1p(ξz)/ξ`, or `z` in the ξ→0 limit. `None` when `1 + ξz <= 0`.
#[inline]
fn scaled_log_term(xi: f64, z: f64) -> Option<f64> {
    if xi.abs() < XI_SWITCH {
        Some(z)
    } else {
        let t = xi * z;
        if t <= -1.0 {
            None
        } else {
            Some(t.ln_1p() / xi)
        }
    }
}

/// `((-ln p)^(-ξ) - 1)/ξ` computed without cancellation; `-ln(-ln p)` for ξ≈0.
#[inline]
pub(crate) fn gev_reduced_quantile(xi: f64, neg_log_p: f64) -> f64 {
    let l = neg_log_p.ln();
    if xi.abs() < XI_SWITCH {
        -l
    } else {
        (-xi * l).exp_m1() / xi
    }
}

impl GevParams {
    pub fn new(mu: f64, sigma: f64, xi: f64) -> Result<Self> {
        let p = GevParams { mu, sigma, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.sigma.is_finite() && self.xi.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite GEV parameters {self:?}")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("GEV scale must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_finite(x, "x")?;
        Ok(self.cdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        match scaled_log_term(self.xi, z) {
            Some(s) => (-(-s).exp()).exp(),
            None if self.xi > 0.0 => 0.0,
            None => 1.0,
        }
    }

    pub fn quantile(&self, prob: f64) -> Result<f64> {
        check_prob(prob)?;
        Ok(self.quantile_unchecked(prob))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, prob: f64) -> f64 {
        self.mu + self.sigma * gev_reduced_quantile(self.xi, -prob.ln())
    }

    pub fn logpdf(&self, x: f64) -> Result<f64> {
        check_finite(x, "x")?;
        Ok(self.logpdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn logpdf_unchecked(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        match scaled_log_term(self.xi, z) {
            // log t = ξ·s; density ∝ t^(-1/ξ-1) exp(-t^(-1/ξ))
            Some(s) => -self.sigma.ln() - (1.0 + self.xi) * s - (-s).exp(),
            None => f64::NEG_INFINITY,
        }
    }

    pub fn support(&self) -> SupportBounds {
        if self.xi.abs() < XI_SWITCH {
            SupportBounds { lower: None, upper: None }
        } else if self.xi > 0.0 {
            SupportBounds { lower: Some(self.mu - self.sigma / self.xi), upper: None }
        } else {
            SupportBounds { lower: None, upper: Some(self.mu - self.sigma / self.xi) }
        }
    }

    /// `n` inverse-CDF draws; draw `i` uses the counter stream `(seed, 0, i)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.quantile_unchecked(CounterRng::new(seed, 0, i).uniform()))
            .collect()
    }
}

impl GpdParams {
    pub fn new(threshold: f64, sigma: f64, xi: f64) -> Result<Self> {
        let p = GpdParams { threshold, sigma, xi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.sigma.is_finite() && self.xi.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite GPD parameters {self:?}")));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParams(format!("GPD scale must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    fn check_x(&self, x: f64) -> Result<()> {
        check_finite(x, "x")?;
        if x < self.threshold {
            return Err(Error::domain(format!(
                "x = {x} lies below the GPD threshold {}",
                self.threshold
            )));
        }
        Ok(())
    }

    /// `P(X <= x | X > u)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.cdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        let z = (x - self.threshold) / self.sigma;
        match scaled_log_term(self.xi, z) {
            Some(s) => -(-s).exp_m1(),
            None => 1.0,
        }
    }

    /// Survival `P(X > x | X > u)`; 1 below the threshold.
    #[inline]
    pub(crate) fn survival_unchecked(&self, x: f64) -> f64 {
        if x <= self.threshold {
            return 1.0;
        }
        let z = (x - self.threshold) / self.sigma;
        match scaled_log_term(self.xi, z) {
            Some(s) => (-s).exp(),
            None => 0.0,
        }
    }

    pub fn quantile(&self, prob: f64) -> Result<f64> {
        check_prob(prob)?;
        Ok(self.quantile_unchecked(prob))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, prob: f64) -> f64 {
        // -ln(1-p), then the same reduced form as the GEV with (-ln(1-p))^-1
        let l = -(-prob).ln_1p();
        let reduced = if self.xi.abs() < XI_SWITCH {
            l
        } else {
            (self.xi * l).exp_m1() / self.xi
        };
        self.threshold + self.sigma * reduced
    }

    pub fn logpdf(&self, x: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(self.logpdf_unchecked(x))
    }

    #[inline]
    pub(crate) fn logpdf_unchecked(&self, x: f64) -> f64 {
        let z = (x - self.threshold) / self.sigma;
        match scaled_log_term(self.xi, z) {
            Some(s) => -self.sigma.ln() - (1.0 + self.xi) * s,
            None => f64::NEG_INFINITY,
        }
    }

    pub fn support(&self) -> SupportBounds {
        let upper = if self.xi < -XI_SWITCH {
            Some(self.threshold + self.sigma / self.xi.abs())
        } else {
            None
        };
        SupportBounds { lower: Some(self.threshold), upper }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        (0..n as u64)
            .into_par_iter()
            .map(|i| self.quantile_unchecked(CounterRng::new(seed, 1, i).uniform()))
            .collect()
    }
}

pub fn gev_cdf(p: &GevParams, x: f64) -> Result<f64> {
    p.cdf(x)
}

pub fn gev_quantile(p: &GevParams, prob: f64) -> Result<f64> {
    p.quantile(prob)
}

pub fn gev_logpdf(p: &GevParams, x: f64) -> Result<f64> {
    p.logpdf(x)
}

pub fn gev_sample(p: &GevParams, n: usize, seed: u64) -> Vec<f64> {
    p.sample(n, seed)
}

pub fn gpd_cdf(p: &GpdParams, x: f64) -> Result<f64> {
    p.cdf(x)
}

pub fn gpd_quantile(p: &GpdParams, prob: f64) -> Result<f64> {
    p.quantile(prob)
}

pub fn gpd_logpdf(p: &GpdParams, x: f64) -> Result<f64> {
    p.logpdf(x)
}
