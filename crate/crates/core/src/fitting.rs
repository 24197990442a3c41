//! Maximum-likelihood fits of the GEV (block maxima) and of the point-process
//! representation of threshold exceedances.
//!
//! Both models are parametrised by GEV-equivalent `(μ, σ, ξ)`. The optimiser
//! works on `(μ, log σ, ξ)`; the covariance is the inverse finite-difference
//! Hessian mapped back to `(μ, σ, ξ)` through the Jacobian `diag(1, σ, 1)`.

use crate::distributions::{GevParams, GpdParams, XI_SWITCH};
use crate::error::{Error, Result};
use crate::optimize::{hessian, nelder_mead, newton_polish, Minimum, INFEASIBLE};
use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Simplex iterations allowed per restart.
    pub max_iterations: usize,
    /// Relative objective tolerance.
    pub tolerance: f64,
    /// Simplex restarts after the first search.
    pub restarts: usize,
    /// Initial simplex steps on (μ/σ₀, log σ, ξ).
    pub initial_steps: [f64; 3],
    pub min_maxima: usize,
    pub min_exceedances: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 2000,
            tolerance: 1e-10,
            restarts: 2,
            initial_steps: [0.2, 0.2, 0.1],
            min_maxima: 10,
            min_exceedances: 20,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.initial_steps.iter().any(|s| !(s.is_finite() && *s != 0.0)) {
            return Err(Error::Config("initial steps must be finite and non-zero".into()));
        }
        Ok(())
    }
}

/// Symmetric covariance of `(μ, σ, ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariance(pub [[f64; 3]; 3]);

impl Covariance {
    pub fn zeros() -> Self {
        Covariance([[0.0; 3]; 3])
    }

    pub fn identity() -> Self {
        Covariance([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn symmetrized(&self) -> Self {
        let m = &self.0;
        Covariance(std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m[i][j] + m[j][i]))))
    }

    /// `gᵀ Σ g` on the symmetrised matrix.
    pub fn quadratic_form(&self, g: &[f64; 3]) -> f64 {
        let m = self.symmetrized().0;
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                acc += g[i] * m[i][j] * g[j];
            }
        }
        acc
    }

    /// Standard errors of μ, σ, ξ.
    pub fn standard_errors(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.0[i][i].max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: GevParams,
    /// `None` when the Hessian at the optimum is singular or indefinite.
    pub covariance: Option<Covariance>,
    pub neg_loglik: f64,
    /// Maxima or exceedances used.
    pub n_used: usize,
    pub n_years: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
    /// Threshold for point-process fits.
    pub threshold: Option<f64>,
}

impl FitResult {
    pub fn standard_errors(&self) -> Option<[f64; 3]> {
        self.covariance.map(|c| c.standard_errors())
    }
}

/// `-Σ log f(mᵢ)` under the GEV; `INFEASIBLE` on support or scale violation.
pub fn gev_negloglik(p: &GevParams, maxima: &[f64]) -> Result<f64> {
    if maxima.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(gev_nll_raw(p.mu, p.sigma, p.xi, maxima))
}

fn gev_nll_raw(mu: f64, sigma: f64, xi: f64, maxima: &[f64]) -> f64 {
    if !(sigma > 0.0) || !mu.is_finite() || !xi.is_finite() {
        return INFEASIBLE;
    }
    let n = maxima.len() as f64;
    let mut acc = n * sigma.ln();
    if xi.abs() < XI_SWITCH {
        for &m in maxima {
            let z = (m - mu) / sigma;
            acc += z + (-z).exp();
        }
    } else {
        for &m in maxima {
            let t = xi * (m - mu) / sigma;
            if t <= -1.0 {
                return INFEASIBLE;
            }
            let s = t.ln_1p() / xi;
            acc += (1.0 + xi) * s + (-s).exp();
        }
    }
    if acc.is_finite() {
        acc.min(INFEASIBLE)
    } else {
        INFEASIBLE
    }
}

/// Point-process negative log-likelihood of exceedances of `u` over `n_years`:
/// `n_years·[1+ξ(u−μ)/σ]^(−1/ξ) + n·log σ + (1/ξ+1)·Σ log[1+ξ(yᵢ−μ)/σ]`.
pub fn pp_negloglik(p: &GevParams, exceedances: &[f64], u: f64, n_years: f64) -> Result<f64> {
    check_pp_inputs(exceedances, u, n_years)?;
    Ok(pp_nll_raw(p.mu, p.sigma, p.xi, exceedances, u, n_years))
}

fn check_pp_inputs(exceedances: &[f64], u: f64, n_years: f64) -> Result<()> {
    if !u.is_finite() {
        return Err(Error::domain(format!("threshold must be finite, got {u}")));
    }
    if !(n_years >= 1.0) || !n_years.is_finite() {
        return Err(Error::domain(format!("n_years must be >= 1, got {n_years}")));
    }
    if let Some(y) = exceedances.iter().find(|&&y| !(y > u)) {
        return Err(Error::domain(format!("value {y} does not exceed threshold {u}")));
    }
    Ok(())
}

fn pp_nll_raw(mu: f64, sigma: f64, xi: f64, exc: &[f64], u: f64, n_years: f64) -> f64 {
    if !(sigma > 0.0) || !mu.is_finite() || !xi.is_finite() {
        return INFEASIBLE;
    }
    let n = exc.len() as f64;
    let zu = (u - mu) / sigma;
    let mut acc;
    if xi.abs() < XI_SWITCH {
        acc = n_years * (-zu).exp() + n * sigma.ln();
        for &y in exc {
            acc += (y - mu) / sigma;
        }
    } else {
        let tu = xi * zu;
        if tu <= -1.0 {
            return INFEASIBLE;
        }
        acc = n_years * (-tu.ln_1p() / xi).exp() + n * sigma.ln();
        let w = 1.0 / xi + 1.0;
        for &y in exc {
            let t = xi * (y - mu) / sigma;
            if t <= -1.0 {
                return INFEASIBLE;
            }
            acc += w * t.ln_1p();
        }
    }
    if acc.is_finite() {
        acc.min(INFEASIBLE)
    } else {
        INFEASIBLE
    }
}

/// GPD negative log-likelihood of the excesses `yᵢ − u`.
pub fn gpd_negloglik(p: &GpdParams, exceedances: &[f64]) -> Result<f64> {
    if exceedances.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(y) = exceedances.iter().find(|&&y| !(y > p.threshold)) {
        return Err(Error::domain(format!("value {y} does not exceed threshold {}", p.threshold)));
    }
    Ok(gpd_nll_raw(p.sigma, p.xi, exceedances, p.threshold))
}

fn gpd_nll_raw(sigma: f64, xi: f64, exc: &[f64], u: f64) -> f64 {
    if !(sigma > 0.0) || !xi.is_finite() {
        return INFEASIBLE;
    }
    let n = exc.len() as f64;
    let mut acc = n * sigma.ln();
    if xi.abs() < XI_SWITCH {
        for &y in exc {
            acc += (y - u) / sigma;
        }
    } else {
        let w = 1.0 / xi + 1.0;
        for &y in exc {
            let t = xi * (y - u) / sigma;
            if t <= -1.0 {
                return INFEASIBLE;
            }
            acc += w * t.ln_1p();
        }
    }
    if acc.is_finite() {
        acc.min(INFEASIBLE)
    } else {
        INFEASIBLE
    }
}

/// What the starting values are computed for.
#[derive(Debug, Clone, Copy)]
pub enum InitMode {
    BlockMaxima,
    Exceedances { threshold: f64, n_years: f64 },
}

/// Moment-based Gumbel starting point; ξ₀ = 0.
///
/// For exceedances μ₀ is moved so that the implied rate over the threshold
/// equals the observed `n / n_years`.
pub fn initial_params(data: &[f64], mode: InitMode) -> Result<GevParams> {
    if data.len() < 2 {
        return Err(Error::InsufficientData { what: "values", needed: 2, got: data.len() });
    }
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::Degenerate("data have zero variance".into()));
    }
    let sigma = 6f64.sqrt() * var.sqrt() / std::f64::consts::PI;
    let mu = match mode {
        InitMode::BlockMaxima => mean - EULER_GAMMA * sigma,
        // exp(-(u - μ)/σ) = n / n_years
        InitMode::Exceedances { threshold, n_years } => threshold + sigma * (n / n_years).ln(),
    };
    Ok(GevParams { mu, sigma, xi: 0.0 })
}

struct Optimum {
    params: [f64; 3],
    value: f64,
    converged: bool,
    restarts: usize,
}

/// Simplex search with restarts from the best point, then Newton polishing.
fn minimise3<F>(f: &mut F, start: [f64; 3], steps: [f64; 3], s: &OptimizerSettings) -> Optimum
where
    F: FnMut(&[f64; 3]) -> f64,
{
    let mut best = nelder_mead(f, start, steps, s.tolerance, s.max_iterations);
    let mut converged = best.converged;
    let mut restarts = 0;
    for _ in 0..s.restarts {
        restarts += 1;
        let next = nelder_mead(f, best.x, steps, s.tolerance, s.max_iterations);
        let change = best.value - next.value;
        let settled = change.abs() <= s.tolerance * (next.value.abs() + s.tolerance);
        converged = next.converged && settled;
        if next.value <= best.value {
            best = next;
        }
        if converged {
            break;
        }
    }
    let best = newton_polish(f, best, 8);
    Optimum {
        params: best.x,
        value: best.value,
        converged: converged && best.value < INFEASIBLE,
        restarts,
    }
}

/// Covariance of `(μ, σ, ξ)` from the Hessian over `(μ, log σ, ξ)`.
fn covariance_at<F>(f: &mut F, theta: &[f64; 3]) -> Option<Covariance>
where
    F: FnMut(&[f64; 3]) -> f64,
{
    let h: Matrix3<f64> = hessian(f, theta)?;
    let chol = h.cholesky()?;
    let inv = chol.inverse();
    let sigma = theta[1].exp();
    let jac = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, sigma, 1.0));
    let cov = jac * inv * jac;
    let out: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| cov[(i, j)]));
    if out.iter().flatten().all(|v| v.is_finite()) {
        Some(Covariance(out).symmetrized())
    } else {
        None
    }
}

fn start_steps(init: &GevParams, s: &OptimizerSettings) -> [f64; 3] {
    [s.initial_steps[0] * init.sigma, s.initial_steps[1], s.initial_steps[2]]
}

/// GEV fit to block maxima.
pub fn fit_gev(maxima: &[f64], settings: &OptimizerSettings) -> Result<FitResult> {
    settings.validate()?;
    if maxima.len() < settings.min_maxima {
        return Err(Error::InsufficientData {
            what: "maxima",
            needed: settings.min_maxima,
            got: maxima.len(),
        });
    }
    if let Some(x) = maxima.iter().find(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite maximum {x}")));
    }
    let init = initial_params(maxima, InitMode::BlockMaxima)?;
    let mut f = |t: &[f64; 3]| gev_nll_raw(t[0], t[1].exp(), t[2], maxima);
    let start = [init.mu, init.sigma.ln(), init.xi];
    let opt = minimise3(&mut f, start, start_steps(&init, settings), settings);
    let covariance = covariance_at(&mut f, &opt.params);
    Ok(FitResult {
        params: GevParams { mu: opt.params[0], sigma: opt.params[1].exp(), xi: opt.params[2] },
        covariance,
        neg_loglik: opt.value,
        n_used: maxima.len(),
        n_years: maxima.len() as f64,
        converged: opt.converged,
        n_restarts_used: opt.restarts,
        threshold: None,
    })
}

/// Point-process fit to values already known to exceed `u`.
pub fn fit_pp_exceedances(
    exceedances: &[f64],
    u: f64,
    n_years: f64,
    settings: &OptimizerSettings,
) -> Result<FitResult> {
    settings.validate()?;
    check_pp_inputs(exceedances, u, n_years)?;
    if exceedances.len() < settings.min_exceedances {
        return Err(Error::InsufficientData {
            what: "exceedances",
            needed: settings.min_exceedances,
            got: exceedances.len(),
        });
    }
    let init = initial_params(exceedances, InitMode::Exceedances { threshold: u, n_years })?;
    let mut f = |t: &[f64; 3]| pp_nll_raw(t[0], t[1].exp(), t[2], exceedances, u, n_years);
    let start = [init.mu, init.sigma.ln(), init.xi];
    let opt = minimise3(&mut f, start, start_steps(&init, settings), settings);
    let covariance = covariance_at(&mut f, &opt.params);
    Ok(FitResult {
        params: GevParams { mu: opt.params[0], sigma: opt.params[1].exp(), xi: opt.params[2] },
        covariance,
        neg_loglik: opt.value,
        n_used: exceedances.len(),
        n_years,
        converged: opt.converged,
        n_restarts_used: opt.restarts,
        threshold: Some(u),
    })
}

/// Point-process fit to the daily values strictly above `u`.
pub fn fit_pot(daily: &[f64], u: f64, n_years: f64, settings: &OptimizerSettings) -> Result<FitResult> {
    let mut exceedances: Vec<f64> = daily.iter().copied().filter(|&y| y > u).collect();
    // summation order must not depend on the input order
    exceedances.sort_by(|a, b| b.total_cmp(a));
    fit_pp_exceedances(&exceedances, u, n_years, settings)
}

/// Direct two-parameter GPD fit to exceedances of `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub params: GpdParams,
    /// Covariance of `(σ′, ξ)`.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub neg_loglik: f64,
    pub n_used: usize,
    pub converged: bool,
}

pub fn fit_gpd(exceedances: &[f64], u: f64, settings: &OptimizerSettings) -> Result<GpdFit> {
    settings.validate()?;
    check_pp_inputs(exceedances, u, 1.0)?;
    if exceedances.len() < settings.min_exceedances {
        return Err(Error::InsufficientData {
            what: "exceedances",
            needed: settings.min_exceedances,
            got: exceedances.len(),
        });
    }
    let mean_excess = exceedances.iter().map(|y| y - u).sum::<f64>() / exceedances.len() as f64;
    let mut f = |t: &[f64; 2]| gpd_nll_raw(t[0].exp(), t[1], exceedances, u);
    let steps = [settings.initial_steps[1], settings.initial_steps[2]];
    let mut best = nelder_mead(&mut f, [mean_excess.ln(), 0.0], steps, settings.tolerance, settings.max_iterations);
    let mut converged = best.converged;
    for _ in 0..settings.restarts {
        let next: Minimum<2> = nelder_mead(&mut f, best.x, steps, settings.tolerance, settings.max_iterations);
        let settled = (best.value - next.value).abs() <= settings.tolerance * (next.value.abs() + settings.tolerance);
        converged = next.converged && settled;
        if next.value <= best.value {
            best = next;
        }
        if converged {
            break;
        }
    }
    let best = newton_polish(&mut f, best, 8);
    let covariance = hessian(&mut f, &best.x).and_then(|h: Matrix2<f64>| {
        let inv = h.cholesky()?.inverse();
        let s = best.x[0].exp();
        let c = [[inv[(0, 0)] * s * s, inv[(0, 1)] * s], [inv[(1, 0)] * s, inv[(1, 1)]]];
        c.iter().flatten().all(|v| v.is_finite()).then_some(c)
    });
    Ok(GpdFit {
        params: GpdParams { threshold: u, sigma: best.x[0].exp(), xi: best.x[1] },
        covariance,
        neg_loglik: best.value,
        n_used: exceedances.len(),
        converged: converged && best.value < INFEASIBLE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::GpdParams;

    #[test]
    fn gev_nll_examples() {
        let p = GevParams::new(0.0, 1.0, 0.0).unwrap();
        assert!((gev_negloglik(&p, &[0.0]).unwrap() - 1.0).abs() < 1e-15);
        let bad = GevParams { mu: 0.0, sigma: -1.0, xi: 0.0 };
        assert_eq!(gev_negloglik(&bad, &[0.0, 1.0]).unwrap(), INFEASIBLE);
        assert!(matches!(gev_negloglik(&p, &[]), Err(Error::EmptyInput)));
        let bounded = GevParams::new(0.0, 1.0, -0.5).unwrap();
        assert_eq!(gev_negloglik(&bounded, &[1.0, 3.0]).unwrap(), INFEASIBLE);
    }

    #[test]
    fn pp_nll_intensity_term_at_threshold() {
        // μ = u, ξ = 0: intensity integral is n_years
        let p = GevParams::new(5.0, 2.0, 0.0).unwrap();
        let v = pp_negloglik(&p, &[7.0], 5.0, 30.0).unwrap();
        let rest = 2f64.ln() + (7.0 - 5.0) / 2.0;
        assert!((v - (30.0 + rest)).abs() < 1e-12);
    }

    #[test]
    fn pp_nll_rejects_non_exceedances() {
        let p = GevParams::new(5.0, 2.0, 0.1).unwrap();
        assert!(pp_negloglik(&p, &[7.0, 5.0], 5.0, 3.0).is_err());
        assert!(pp_negloglik(&p, &[7.0], 5.0, 0.5).is_err());
    }

    #[test]
    fn initial_params_degenerate() {
        assert!(matches!(initial_params(&[1.0, 1.0, 1.0], InitMode::BlockMaxima), Err(Error::Degenerate(_))));
        let p = initial_params(&[1.0, 2.0, 3.0], InitMode::BlockMaxima).unwrap();
        assert_eq!(p.xi, 0.0);
    }

    #[test]
    fn initial_params_exceedance_rate_matches() {
        let data = [11.0, 12.0, 15.0, 13.5];
        let p = initial_params(&data, InitMode::Exceedances { threshold: 10.0, n_years: 8.0 }).unwrap();
        let rate = (-(10.0 - p.mu) / p.sigma).exp();
        assert!((rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fit_gev_floor_and_failure_modes() {
        let s = OptimizerSettings::default();
        assert!(matches!(fit_gev(&[1.0; 5], &s), Err(Error::InsufficientData { .. })));
        assert!(matches!(fit_gev(&[1.0; 20], &s), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fit_pot_errors() {
        let s = OptimizerSettings::default();
        let daily = vec![1.0; 100];
        let err = fit_pot(&daily, 2.0, 10.0, &s).unwrap_err();
        assert!(err.to_string().contains("got 0"), "{err}");
    }

    #[test]
    fn fit_pot_permutation_invariant() {
        let gpd = GpdParams::new(10.0, 3.0, 0.1).unwrap();
        let mut daily = gpd.sample(300, 3);
        daily.extend((0..500).map(|i| (i % 10) as f64));
        let s = OptimizerSettings::default();
        let a = fit_pot(&daily, 10.0, 50.0, &s).unwrap();
        daily.reverse();
        daily.rotate_left(77);
        let b = fit_pot(&daily, 10.0, 50.0, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_gev_optimality() {
        let truth = GevParams::new(10.0, 2.0, 0.1).unwrap();
        let x = truth.sample(2000, 5);
        let s = OptimizerSettings::default();
        let fit = fit_gev(&x, &s).unwrap();
        assert!(fit.converged);
        let init = initial_params(&x, InitMode::BlockMaxima).unwrap();
        assert!(fit.neg_loglik <= gev_negloglik(&init, &x).unwrap());
        // restarting at the optimum cannot improve it
        let mut f = |t: &[f64; 3]| gev_nll_raw(t[0], t[1].exp(), t[2], &x);
        let p = fit.params;
        let again = nelder_mead(&mut f, [p.mu, p.sigma.ln(), p.xi], [0.01, 0.01, 0.01], 1e-12, 2000);
        assert!(fit.neg_loglik - again.value <= 1e-10 * fit.neg_loglik.abs());
        let cov = fit.covariance.unwrap();
        for i in 0..3 {
            assert!(cov.0[i][i] > 0.0);
            for j in 0..3 {
                assert_eq!(cov.0[i][j], cov.0[j][i]);
            }
        }
    }

    #[test]
    fn gpd_fit_recovers_exponential_tail() {
        let gpd = GpdParams::new(0.0, 2.0, 0.0).unwrap();
        let mut x = gpd.sample(5000, 11);
        x.retain(|&v| v > 0.0);
        let fit = fit_gpd(&x, 0.0, &OptimizerSettings::default()).unwrap();
        assert!(fit.converged);
        let c = fit.covariance.unwrap();
        assert!((fit.params.sigma - 2.0).abs() < 3.0 * c[0][0].sqrt());
        assert!(fit.params.xi.abs() < 3.0 * c[1][1].sqrt());
    }
}
