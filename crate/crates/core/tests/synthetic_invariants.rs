mod common;

use common::*;
use eva_core::aep::aep_with_uncertainty;
use eva_core::fitting::{fit_pp_exceedances, OptimizerSettings};
use eva_core::synthetic::{generate_cell, preset, true_quantile, Magnitude, StormType};
use eva_core::threshold::select_exceedances;
use eva_core::Season;
use rayon::prelude::*;

#[test]
fn cells_do_not_depend_on_thread_count() {
    let spec = preset("precip-mixture").unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a: Vec<_> = one.install(|| (0..6).into_par_iter().map(|c| generate_cell(&spec, c, 30, 5).unwrap()).collect());
    let b: Vec<_> = four.install(|| (0..6).into_par_iter().map(|c| generate_cell(&spec, c, 30, 5).unwrap()).collect());
    assert_eq!(a, b);
    assert_ne!(a[0].values, a[1].values);
    assert_ne!(a[0].values, generate_cell(&spec, 0, 30, 6).unwrap().values);
}

#[test]
fn longer_record_extends_shorter_one() {
    let spec = preset("precip-homogeneous").unwrap();
    let short = generate_cell(&spec, 3, 10, 1).unwrap();
    let long = generate_cell(&spec, 3, 25, 1).unwrap();
    assert_eq!(short.values[..], long.values[..short.values.len()]);
}

#[test]
fn homogeneous_shape_recovered_within_three_standard_errors() {
    let spec = preset("precip-homogeneous").unwrap();
    let years = 200;
    let settings = OptimizerSettings::default();
    let inside: Vec<bool> = (0..100u64)
        .into_par_iter()
        .map(|c| {
            let s = generate_cell(&spec, c, years, 13).unwrap();
            let sel = select_exceedances(&s.values, 700).unwrap();
            let fit = fit_pp_exceedances(&sel.exceedances, sel.threshold, years as f64, &settings).unwrap();
            let se = fit.standard_errors().unwrap()[2];
            (fit.params.xi - 0.1).abs() <= 3.0 * se
        })
        .collect();
    let frac = inside.iter().filter(|b| **b).count() as f64 / 100.0;
    assert!(frac >= 0.9, "only {frac} of cells bracket the generating shape");
}

#[test]
fn single_gev_type_truth_matches_analytic_annual_maximum() {
    // every day is GEV(10, 3, -0.2); the annual maximum has cdf F^365
    let mut spec = preset("temperature-bounded").unwrap();
    spec.baseline = None;
    let period = 50.0;
    let truth = true_quantile(&spec, period, 200_000, 17).unwrap();
    for season in Season::ALL {
        spec.season_mut(season)[0].magnitude = Magnitude::Gev { location: 10.0, scale: 3.0, shape: -0.2 };
    }
    let truth_shifted = true_quantile(&spec, period, 200_000, 17).unwrap();
    let p = (1.0 - 1.0 / period).powf(1.0 / 365.0);
    let analytic = gev_quantile(p, 0.0, 3.0, -0.2);
    assert!((truth.value - analytic).abs() <= 4.0 * truth.mc_se + 1e-9, "{} vs {analytic}", truth.value);
    let analytic = gev_quantile(p, 10.0, 3.0, -0.2);
    assert!((truth_shifted.value - analytic).abs() <= 4.0 * truth_shifted.mc_se + 1e-9);
}

#[test]
fn zero_probability_component_changes_nothing() {
    let spec = preset("precip-mixture").unwrap();
    let mut with_null = spec.clone();
    for season in Season::ALL {
        with_null.season_mut(season).push(StormType {
            name: "never".into(),
            probability: 0.0,
            magnitude: Magnitude::Constant { value: 1e6 },
        });
    }
    with_null.validate().unwrap();
    assert_eq!(generate_cell(&spec, 2, 40, 9).unwrap().values, generate_cell(&with_null, 2, 40, 9).unwrap().values);
}

#[test]
fn temperature_preset_is_bounded_and_tightly_estimated() {
    let spec = preset("temperature-bounded").unwrap();
    let bound = spec.upper_bound().unwrap();
    let s = generate_cell(&spec, 0, 300, 21).unwrap();
    assert!(s.values.iter().all(|v| *v <= bound));
    let sel = select_exceedances(&s.values, 300).unwrap();
    let fit = fit_pp_exceedances(&sel.exceedances, sel.threshold, 300.0, &OptimizerSettings::default()).unwrap();
    assert!(fit.params.xi < 0.0);
    let est = aep_with_uncertainty(&fit, 100.0).unwrap();
    assert!(est.value <= bound + 1.0);
}
