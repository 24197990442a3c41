mod common;

use common::*;
use eva_core::distributions::{GevParams, GpdParams};
use eva_core::fitting::{fit_gev, fit_pot, gev_negloglik, gpd_negloglik, pp_negloglik, OptimizerSettings};

#[test]
fn gev_likelihood_matches_density_sum() {
    let data = gev_draws(200, 5.0, 2.0, 0.15, 1, 0);
    for xi in [-0.2, 0.0, 0.1, 0.3] {
        let p = GevParams::new(5.2, 1.8, xi).unwrap();
        let want: f64 = -data.iter().map(|x| gev_pdf(*x, 5.2, 1.8, xi).ln()).sum::<f64>();
        let got = gev_negloglik(&p, &data).unwrap_or(f64::INFINITY);
        if want.is_finite() {
            assert!((got - want).abs() <= 1e-9 * want.abs(), "xi={xi}: {got} vs {want}");
        } else {
            // outside the support the optimiser sees a large finite penalty
            assert!(got >= 1e29, "xi={xi}: {got}");
        }
    }
}

#[test]
fn gpd_likelihood_matches_density_sum() {
    let data: Vec<f64> = gev_draws(100, 0.0, 1.0, 0.0, 2, 0).iter().map(|x| 3.0 + x.abs()).collect();
    for xi in [-0.1, 0.0, 0.2] {
        let p = GpdParams::new(3.0, 1.3, xi).unwrap();
        let want: f64 = -data.iter().map(|x| gpd_pdf(*x, 3.0, 1.3, xi).ln()).sum::<f64>();
        let got = gpd_negloglik(&p, &data).unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs(), "xi={xi}: {got} vs {want}");
    }
}

#[test]
fn point_process_likelihood_matches_closed_form() {
    let exc = pp_draws(300.0, 10.0, 2.0, 0.1, 3, 0);
    let (u, years) = (10.0, 300.0);
    for (mu, sigma, xi) in [(10.0, 2.0, 0.1), (9.5, 2.5, -0.1), (10.2, 1.9, 0.0)] {
        let t = |x: f64| 1.0 + xi * (x - mu) / sigma;
        // log of the point density divided by sigma, and the expected count above u
        let log_density = |x: f64| if xi == 0.0 { -(x - mu) / sigma } else { -(1.0 + 1.0 / xi) * t(x).ln() };
        let rate = if xi == 0.0 { (-(u - mu) / sigma).exp() } else { t(u).powf(-1.0 / xi) };
        let want = years * rate + exc.iter().map(|x| sigma.ln() - log_density(*x)).sum::<f64>();
        let got = pp_negloglik(&GevParams::new(mu, sigma, xi).unwrap(), &exc, u, years).unwrap();
        assert!((got - want).abs() <= 1e-9 * want.abs(), "({mu}, {sigma}, {xi}): {got} vs {want}");
    }
}

#[test]
fn large_sample_fits_recover_parameters() {
    let s = OptimizerSettings::default();
    let fit = fit_gev(&gev_draws(20_000, 5.0, 2.0, 0.1, 4, 0), &s).unwrap();
    assert!(fit.converged);
    assert!((fit.params.mu - 5.0).abs() < 0.06 && (fit.params.sigma - 2.0).abs() < 0.06);
    assert!((fit.params.xi - 0.1).abs() < 0.03);

    // daily record where everything below the threshold is zero
    let mut daily = vec![0.0; 3650];
    let exc = pp_draws(2000.0, 1.0, 0.5, -0.1, 5, 0);
    daily.extend(&exc);
    let fit = fit_pot(&daily, 1.0, 2000.0, &s).unwrap();
    assert_eq!(fit.n_used, exc.len());
    assert!((fit.params.xi + 0.1).abs() < 0.1, "{:?}", fit.params);
}

#[test]
fn fits_reject_degenerate_input() {
    let s = OptimizerSettings::default();
    assert!(fit_gev(&[], &s).is_err());
    assert!(fit_gev(&[1.0, 2.0], &s).is_err());
    assert!(fit_gev(&[3.0; 50], &s).is_err());
    assert!(fit_pot(&[1.0, 2.0, f64::NAN], 0.0, 1.0, &s).is_err());
}
