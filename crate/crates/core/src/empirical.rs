//! Model-free AEP values: annual maxima and their empirical quantiles.

use crate::calendar::DailySeries;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default guard: empirical 1-in-T values need at least `2·T` years.
pub const DEFAULT_YEARS_PER_PERIOD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualMaxima {
    pub values: Vec<f64>,
    pub start_year: i32,
}

impl AnnualMaxima {
    pub fn n_years(&self) -> usize {
        self.values.len()
    }
}

/// One maximum per calendar year over its 365 non-leap days.
pub fn annual_maxima(series: &DailySeries) -> Result<AnnualMaxima> {
    series.calendar.check_length(series.values.len())?;
    let mut values = Vec::with_capacity(series.calendar.n_years as usize);
    let mut current: Option<(i32, f64)> = None;
    for (day, v) in series.days() {
        if day.is_feb29() {
            continue;
        }
        match current {
            Some((year, m)) if year == day.year => current = Some((year, m.max(v))),
            Some((_, m)) => {
                values.push(m);
                current = Some((day.year, v));
            }
            None => current = Some((day.year, v)),
        }
    }
    if let Some((_, m)) = current {
        values.push(m);
    }
    Ok(AnnualMaxima { values, start_year: series.calendar.start_year })
}

/// Quantile at probability `prob` with plotting positions `i/(n+1)` and
/// linear interpolation; clamps to the extreme order statistics.
pub fn plotting_position_quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let h = prob * (n as f64 + 1.0);
    if h <= 1.0 {
        return sorted[0];
    }
    if h >= n as f64 {
        return sorted[n - 1];
    }
    let i = h.floor() as usize;
    let frac = h - i as f64;
    sorted[i - 1] + frac * (sorted[i] - sorted[i - 1])
}

/// Same as [`plotting_position_quantile`] on unsorted data, in O(n).
pub fn quantile_unsorted(values: &mut [f64], prob: f64) -> f64 {
    let n = values.len();
    let h = prob * (n as f64 + 1.0);
    if h <= 1.0 {
        return values.iter().copied().fold(f64::INFINITY, f64::min);
    }
    if h >= n as f64 {
        return values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let i = h.floor() as usize;
    let frac = h - i as f64;
    let (_, lo, upper) = values.select_nth_unstable_by(i - 1, |a, b| a.total_cmp(b));
    let lo = *lo;
    let hi = upper.iter().copied().fold(f64::INFINITY, f64::min);
    lo + frac * (hi - lo)
}

/// Empirical 1-in-T value from annual maxima.
pub fn empirical_aep(maxima: &AnnualMaxima, period: f64) -> Result<f64> {
    empirical_aep_with_guard(&maxima.values, period, DEFAULT_YEARS_PER_PERIOD)
}

pub fn empirical_aep_with_guard(maxima: &[f64], period: f64, years_per_period: f64) -> Result<f64> {
    if !(period > 1.0) {
        return Err(Error::domain(format!("return period must be > 1 year, got {period}")));
    }
    let required = (years_per_period * period).ceil() as usize;
    if maxima.len() < required.max(1) {
        return Err(Error::InsufficientData { what: "years of annual maxima", needed: required, got: maxima.len() });
    }
    let mut sorted = maxima.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(plotting_position_quantile(&sorted, 1.0 - 1.0 / period))
}
