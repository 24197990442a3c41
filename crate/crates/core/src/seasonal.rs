//! Season-stratified point-process fits combined into an overall AEP value.
//!
//! Each season is treated as one block per calendar year, so a seasonal
//! 1-in-T value is an annual exceedance probability for that season and the
//! overall value is the largest seasonal one.

use crate::aep::AepEstimate;
use crate::calendar::{noleap_month, DailySeries};
use crate::error::{Error, Result};
use crate::fitting::{FitResult, OptimizerSettings};
use crate::threshold::{fit_and_estimate, SortedValues, ThresholdSchedule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    Djf,
    Mam,
    Jja,
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    pub fn from_month(month: u32) -> Result<Season> {
        match month {
            12 | 1 | 2 => Ok(Season::Djf),
            3..=5 => Ok(Season::Mam),
            6..=8 => Ok(Season::Jja),
            9..=11 => Ok(Season::Son),
            _ => Err(Error::domain(format!("month must be in 1..=12, got {month}"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Season {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Season::ALL
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown season {s:?}")))
    }
}

/// Season of a day of the 365-day year.
pub fn assign_season(day_of_year: u32) -> Result<Season> {
    Season::from_month(noleap_month(day_of_year)?)
}

/// Splits a series into per-season values (December pooled with the same
/// calendar year's January and February).
pub fn split_by_season(series: &DailySeries) -> [Vec<f64>; 4] {
    let mut out: [Vec<f64>; 4] = Default::default();
    for (day, v) in series.days() {
        let season = Season::from_month(day.month).expect("calendar months are valid");
        out[season.index()].push(v);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Approach {
    /// Full-year thresholds applied in every season.
    SameThreshold,
    /// Each season keeps the full-year number of exceedances.
    SameCount,
}

impl Approach {
    pub fn number(self) -> u8 {
        match self {
            Approach::SameThreshold => 1,
            Approach::SameCount => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonFit {
    pub season: Season,
    pub threshold: Option<f64>,
    pub n_exceedances: usize,
    pub fit: Option<FitResult>,
    pub aep: Vec<AepEstimate>,
    /// Why the season is absent from the combination.
    pub absent: Option<String>,
}

impl SeasonFit {
    pub fn is_present(&self) -> bool {
        self.absent.is_none() && self.fit.as_ref().is_some_and(|f| f.converged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalResult {
    pub approach: Approach,
    pub tail_probability: f64,
    /// Full-year exceedance count of this schedule entry.
    pub count: usize,
    pub full_year_threshold: f64,
    pub seasons: Vec<SeasonFit>,
    /// Combined estimate per requested period; `None` when no season is present.
    pub combined: Vec<Option<AepEstimate>>,
    /// Season supplying each combined value.
    pub combined_from: Vec<Option<Season>>,
}

/// Largest seasonal value; ties go to the earliest season (DJF < MAM < JJA < SON).
pub fn combine_seasonal(estimates: &[(Season, AepEstimate)]) -> Result<(Season, AepEstimate)> {
    let mut sorted: Vec<&(Season, AepEstimate)> = estimates.iter().collect();
    sorted.sort_by_key(|(s, _)| *s);
    let mut best: Option<&(Season, AepEstimate)> = None;
    for item in sorted {
        if best.is_none_or(|b| item.1.value > b.1.value) {
            best = Some(item);
        }
    }
    best.copied().ok_or_else(|| Error::domain("no seasonal estimate present"))
}

fn absent(season: Season, threshold: Option<f64>, n: usize, why: String) -> SeasonFit {
    SeasonFit { season, threshold, n_exceedances: n, fit: None, aep: Vec::new(), absent: Some(why) }
}

fn season_fit(
    season: Season,
    exceedances: &[f64],
    threshold: f64,
    n_years: f64,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> SeasonFit {
    if exceedances.len() < settings.min_exceedances {
        return absent(
            season,
            Some(threshold),
            exceedances.len(),
            format!("{} exceedances, below the floor of {}", exceedances.len(), settings.min_exceedances),
        );
    }
    let (fit, aep, error) = fit_and_estimate(exceedances, threshold, n_years, periods, settings);
    let present = fit.as_ref().is_some_and(|f| f.converged) && error.is_none();
    SeasonFit {
        season,
        threshold: Some(threshold),
        n_exceedances: exceedances.len(),
        fit,
        aep,
        absent: if present { None } else { Some(error.unwrap_or_else(|| "fit did not converge".into())) },
    }
}

fn combine_all(seasons: &[SeasonFit], periods: &[f64]) -> (Vec<Option<AepEstimate>>, Vec<Option<Season>>) {
    periods
        .iter()
        .map(|&t| {
            let present: Vec<(Season, AepEstimate)> = seasons
                .iter()
                .filter(|s| s.is_present())
                .filter_map(|s| s.aep.iter().find(|a| a.period == t).map(|a| (s.season, *a)))
                .collect();
            match combine_seasonal(&present) {
                Ok((s, a)) => (Some(a), Some(s)),
                Err(_) => (None, None),
            }
        })
        .unzip()
}

struct Prepared {
    full: SortedValues,
    seasons: Vec<SortedValues>,
    n_years: f64,
}

fn prepare(series: &DailySeries) -> Prepared {
    let split = split_by_season(series);
    Prepared {
        full: SortedValues::new(&series.values),
        seasons: split.iter().map(|v| SortedValues::new(v)).collect(),
        n_years: series.n_years() as f64,
    }
}

/// Full-year thresholds applied per season, after dropping the two highest.
pub fn seasonal_fit_approach1(
    series: &DailySeries,
    schedule: &ThresholdSchedule,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> Result<Vec<SeasonalResult>> {
    let prep = prepare(series);
    let trimmed = schedule.without_highest(2);
    let entries: Vec<(f64, usize)> = trimmed.entries().collect();
    entries
        .par_iter()
        .map(|&(q, count)| {
            let u = prep.full.select(count)?.threshold;
            let seasons: Vec<SeasonFit> = Season::ALL
                .iter()
                .map(|&season| {
                    let exc = prep.seasons[season.index()].above(u);
                    season_fit(season, exc, u, prep.n_years, periods, settings)
                })
                .collect();
            let (combined, combined_from) = combine_all(&seasons, periods);
            Ok(SeasonalResult {
                approach: Approach::SameThreshold,
                tail_probability: q,
                count,
                full_year_threshold: u,
                seasons,
                combined,
                combined_from,
            })
        })
        .collect()
}

/// Per-season thresholds chosen so each season keeps the full-year count.
pub fn seasonal_fit_approach2(
    series: &DailySeries,
    schedule: &ThresholdSchedule,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> Result<Vec<SeasonalResult>> {
    let prep = prepare(series);
    let entries: Vec<(f64, usize)> = schedule.entries().collect();
    entries
        .par_iter()
        .map(|&(q, count)| {
            let u = prep.full.select(count)?.threshold;
            let seasons: Vec<SeasonFit> = Season::ALL
                .iter()
                .map(|&season| match prep.seasons[season.index()].select(count) {
                    Ok(sel) => season_fit(season, &sel.exceedances, sel.threshold, prep.n_years, periods, settings),
                    Err(e) => absent(season, None, 0, format!("count infeasible: {e}")),
                })
                .collect();
            let (combined, combined_from) = combine_all(&seasons, periods);
            Ok(SeasonalResult {
                approach: Approach::SameCount,
                tail_probability: q,
                count,
                full_year_threshold: u,
                seasons,
                combined,
                combined_from,
            })
        })
        .collect()
}
