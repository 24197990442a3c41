//! Synthetic daily ensembles from seasonal storm-type mixtures.
//!
//! Each day draws a storm type from its season's occurrence probabilities
//! (or is quiet) and then a magnitude from that type. Every day of every cell
//! has its own counter-based stream keyed by `(seed, cell, day)`.

use crate::calendar::{Calendar, DailySeries, NOLEAP_MONTH_LENGTHS};
use crate::distributions::{GevParams, GpdParams};
use crate::empirical::quantile_unsorted;
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::seasonal::Season;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::ContinuousCDF;
use std::path::Path;

pub const PRESETS: [&str; 3] = ["precip-mixture", "precip-homogeneous", "temperature-bounded"];

/// Stream index reserved for per-cell parameter jitter.
const JITTER_INDEX: u64 = u64::MAX;
/// Stream used for Monte Carlo truth simulation.
const TRUTH_STREAM: u64 = u64::MAX - 1;
const TRUTH_BATCHES: usize = 10;
/// Nominal first year of generated records.
pub const SYNTHETIC_START_YEAR: i32 = 2001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Magnitude {
    Constant { value: f64 },
    Gamma { shape: f64, scale: f64 },
    Gpd { threshold: f64, scale: f64, shape: f64 },
    Gev { location: f64, scale: f64, shape: f64 },
}

impl Magnitude {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Magnitude::Constant { value } => value.is_finite(),
            Magnitude::Gamma { shape, scale } => shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite(),
            Magnitude::Gpd { threshold, scale, shape } => GpdParams::new(threshold, scale, shape).is_ok(),
            Magnitude::Gev { location, scale, shape } => GevParams::new(location, scale, shape).is_ok(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Spec(format!("invalid magnitude distribution {self:?}")))
        }
    }

    fn lower_bound(&self) -> f64 {
        match *self {
            Magnitude::Constant { value } => value,
            Magnitude::Gamma { .. } => 0.0,
            Magnitude::Gpd { threshold, .. } => threshold,
            Magnitude::Gev { location, scale, shape } => {
                GevParams { mu: location, sigma: scale, xi: shape }.support().lower.unwrap_or(f64::NEG_INFINITY)
            }
        }
    }

    /// Largest attainable value, if bounded.
    pub fn upper_bound(&self) -> Option<f64> {
        match *self {
            Magnitude::Constant { value } => Some(value),
            Magnitude::Gamma { .. } => None,
            Magnitude::Gpd { threshold, scale, shape } => GpdParams { threshold, sigma: scale, xi: shape }.support().upper,
            Magnitude::Gev { location, scale, shape } => GevParams { mu: location, sigma: scale, xi: shape }.support().upper,
        }
    }

    fn scaled(&self, factor: f64) -> Magnitude {
        match *self {
            Magnitude::Constant { value } => Magnitude::Constant { value },
            Magnitude::Gamma { shape, scale } => Magnitude::Gamma { shape, scale: scale * factor },
            Magnitude::Gpd { threshold, scale, shape } => Magnitude::Gpd { threshold, scale: scale * factor, shape },
            Magnitude::Gev { location, scale, shape } => Magnitude::Gev { location, scale: scale * factor, shape },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormType {
    pub name: String,
    /// Daily occurrence probability within the season.
    pub probability: f64,
    pub magnitude: Magnitude,
}

/// `mean + amplitude·cos(2π(day − peak_day)/365)` added to every day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub mean: f64,
    pub amplitude: f64,
    pub peak_day: f64,
}

impl Sinusoid {
    pub fn at(&self, day_of_year: u32) -> f64 {
        let phase = 2.0 * std::f64::consts::PI * (day_of_year as f64 - self.peak_day) / 365.0;
        self.mean + self.amplitude * phase.cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub name: String,
    pub variable: String,
    pub units: String,
    /// Value of a day on which no storm type occurs (before the baseline).
    #[serde(default)]
    pub quiet_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<Sinusoid>,
    #[serde(default = "one")]
    pub cells: usize,
    /// Relative half-width of the per-cell uniform jitter on scale parameters.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub djf: Vec<StormType>,
    #[serde(default)]
    pub mam: Vec<StormType>,
    #[serde(default)]
    pub jja: Vec<StormType>,
    #[serde(default)]
    pub son: Vec<StormType>,
}

fn one() -> usize {
    1
}

impl MixtureSpec {
    pub fn season(&self, season: Season) -> &[StormType] {
        match season {
            Season::Djf => &self.djf,
            Season::Mam => &self.mam,
            Season::Jja => &self.jja,
            Season::Son => &self.son,
        }
    }

    pub fn season_mut(&mut self, season: Season) -> &mut Vec<StormType> {
        match season {
            Season::Djf => &mut self.djf,
            Season::Mam => &mut self.mam,
            Season::Jja => &mut self.jja,
            Season::Son => &mut self.son,
        }
    }

    fn is_precipitation(&self) -> bool {
        let v = self.variable.to_ascii_lowercase();
        v.starts_with("pr") || v.contains("precip")
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells == 0 {
            return Err(Error::Spec("cells must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::Spec(format!("jitter must lie in [0, 1), got {}", self.jitter)));
        }
        if !self.quiet_value.is_finite() {
            return Err(Error::Spec("quiet_value must be finite".into()));
        }
        if let Some(b) = &self.baseline {
            if !(b.mean.is_finite() && b.amplitude.is_finite() && b.peak_day.is_finite()) {
                return Err(Error::Spec("baseline parameters must be finite".into()));
            }
        }
        for season in Season::ALL {
            let types = self.season(season);
            let mut total = 0.0;
            for t in types {
                if !(0.0..=1.0).contains(&t.probability) {
                    return Err(Error::Spec(format!(
                        "{season} type {:?}: probability {} outside [0, 1]",
                        t.name, t.probability
                    )));
                }
                t.magnitude.validate()?;
                total += t.probability;
            }
            if total > 1.0 + 1e-12 {
                return Err(Error::Spec(format!("{season} occurrence probabilities sum to {total} > 1")));
            }
        }
        if self.is_precipitation() {
            let negative_baseline = self.baseline.is_some_and(|b| b.mean - b.amplitude.abs() < 0.0);
            let negative_type = Season::ALL
                .iter()
                .flat_map(|&s| self.season(s))
                .any(|t| t.magnitude.lower_bound() < 0.0);
            if self.quiet_value < 0.0 || negative_baseline || negative_type {
                return Err(Error::Spec("precipitation spec can produce negative values".into()));
            }
        }
        Ok(())
    }

    /// Concrete spec for one cell with its jitter applied.
    pub fn for_cell(&self, cell: u64, seed: u64) -> MixtureSpec {
        let mut out = self.clone();
        out.jitter = 0.0;
        out.cells = 1;
        if self.jitter > 0.0 {
            let u = CounterRng::new(seed, cell, JITTER_INDEX).uniform();
            let factor = 1.0 + self.jitter * (2.0 * u - 1.0);
            for season in Season::ALL {
                for t in out.season_mut(season) {
                    t.magnitude = t.magnitude.scaled(factor);
                }
            }
        }
        out
    }

    /// Largest value any day can take, if bounded.
    pub fn upper_bound(&self) -> Option<f64> {
        let base = self.baseline.map_or(0.0, |b| b.mean + b.amplitude.abs());
        let mut bound = self.quiet_value;
        for season in Season::ALL {
            for t in self.season(season) {
                if t.probability > 0.0 {
                    bound = bound.max(t.magnitude.upper_bound()?);
                }
            }
        }
        Some(base + bound)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: MixtureSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

enum Sampler {
    Constant(f64),
    Gamma(Gamma<f64>, statrs::distribution::Gamma),
    Gpd(GpdParams),
    Gev(GevParams),
}

impl Sampler {
    fn new(m: &Magnitude) -> Self {
        match *m {
            Magnitude::Constant { value } => Sampler::Constant(value),
            Magnitude::Gamma { shape, scale } => Sampler::Gamma(
                Gamma::new(shape, scale).expect("validated"),
                statrs::distribution::Gamma::new(shape, 1.0 / scale).expect("validated"),
            ),
            Magnitude::Gpd { threshold, scale, shape } => Sampler::Gpd(GpdParams { threshold, sigma: scale, xi: shape }),
            Magnitude::Gev { location, scale, shape } => Sampler::Gev(GevParams { mu: location, sigma: scale, xi: shape }),
        }
    }

    #[inline]
    fn sample(&self, rng: &mut CounterRng) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::Gamma(g, _) => g.sample(rng),
            Sampler::Gpd(p) => p.quantile_unchecked(rng.uniform()),
            Sampler::Gev(p) => p.quantile_unchecked(rng.uniform()),
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            Sampler::Constant(v) => {
                if x >= *v {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Gamma(_, g) => {
                if x <= 0.0 {
                    0.0
                } else {
                    g.cdf(x)
                }
            }
            Sampler::Gpd(p) => 1.0 - p.survival_unchecked(x),
            Sampler::Gev(p) => p.cdf_unchecked(x),
        }
    }

    /// Quantile at non-exceedance probability `1 - survival`.
    fn quantile_from_survival(&self, survival: f64) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::Gamma(_, g) => g.inverse_cdf(1.0 - survival),
            Sampler::Gpd(p) => {
                let reduced = if p.xi.abs() < crate::distributions::XI_SWITCH {
                    -survival.ln()
                } else {
                    (-p.xi * survival.ln()).exp_m1() / p.xi
                };
                p.threshold + p.sigma * reduced
            }
            Sampler::Gev(p) => p.mu + p.sigma * crate::distributions::gev_reduced_quantile(p.xi, -(-survival).ln_1p()),
        }
    }
}

struct CompiledType {
    cumulative: f64,
    probability: f64,
    sampler: Sampler,
}

struct Compiled {
    seasons: [Vec<CompiledType>; 4],
    quiet_value: f64,
    baseline: Option<Sinusoid>,
    /// Season of each 365-day-calendar day (index 0 = Jan 1).
    day_season: [Season; 365],
}

impl Compiled {
    fn new(spec: &MixtureSpec) -> Self {
        let seasons = Season::ALL.map(|s| {
            let mut cum = 0.0;
            spec.season(s)
                .iter()
                .map(|t| {
                    cum += t.probability;
                    CompiledType { cumulative: cum, probability: t.probability, sampler: Sampler::new(&t.magnitude) }
                })
                .collect()
        });
        let mut day_season = [Season::Djf; 365];
        let mut d = 0;
        for (m, &len) in NOLEAP_MONTH_LENGTHS.iter().enumerate() {
            let season = Season::from_month(m as u32 + 1).expect("valid month");
            for _ in 0..len {
                day_season[d] = season;
                d += 1;
            }
        }
        Compiled { seasons, quiet_value: spec.quiet_value, baseline: spec.baseline, day_season }
    }

    #[inline]
    fn day_value(&self, day_index: usize, rng: &mut CounterRng) -> f64 {
        let base = self.baseline.map_or(0.0, |b| b.at(day_index as u32 + 1));
        let types = &self.seasons[self.day_season[day_index].index()];
        let u = rng.uniform();
        for t in types {
            if u < t.cumulative {
                return base + t.sampler.sample(rng);
            }
        }
        base + self.quiet_value
    }
}

/// Daily record of `n_years` 365-day years for cell `cell`.
pub fn generate_cell(spec: &MixtureSpec, cell: u64, n_years: u32, seed: u64) -> Result<DailySeries> {
    spec.validate()?;
    if n_years == 0 {
        return Err(Error::Spec("n_years must be >= 1".into()));
    }
    let concrete = spec.for_cell(cell, seed);
    let compiled = Compiled::new(&concrete);
    let mut values = vec![0.0; n_years as usize * 365];
    values.par_chunks_mut(365).enumerate().for_each(|(year, chunk)| {
        for (d, v) in chunk.iter_mut().enumerate() {
            let global_day = (year * 365 + d) as u64;
            let mut rng = CounterRng::new(seed, cell, global_day);
            *v = compiled.day_value(d, &mut rng);
        }
    });
    DailySeries::new(
        format!("cell-{cell:04}"),
        values,
        Calendar::noleap(SYNTHETIC_START_YEAR, n_years),
        spec.variable.clone(),
        spec.units.clone(),
    )
}

/// Brute-force 1-in-T value of a concrete spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub spec: MixtureSpec,
    pub period: f64,
    pub value: f64,
    /// Standard error from 10 batches of the simulated years.
    pub mc_se: f64,
    pub mc_years: u64,
}

/// Annual maximum of one simulated year.
fn simulate_annual_max(compiled: &Compiled, days_per_season: &[u64; 4], rng: &mut CounterRng) -> f64 {
    if compiled.baseline.is_some() {
        // days differ within a season; simulate them one by one
        return (0..365).map(|d| compiled.day_value(d, rng)).fold(f64::NEG_INFINITY, f64::max);
    }
    let mut max = f64::NEG_INFINITY;
    for season in Season::ALL {
        let types = &compiled.seasons[season.index()];
        let mut remaining = days_per_season[season.index()];
        let mut prob_left = 1.0;
        let mut counts = Vec::with_capacity(types.len());
        for t in types {
            let k = if remaining == 0 || t.probability <= 0.0 {
                0
            } else if t.probability >= prob_left {
                remaining
            } else {
                Binomial::new(remaining, (t.probability / prob_left).min(1.0)).expect("valid").sample(rng)
            };
            counts.push(k);
            remaining -= k;
            prob_left -= t.probability;
        }
        if remaining > 0 {
            max = max.max(compiled.quiet_value);
        }
        for (t, &k) in types.iter().zip(&counts) {
            if k == 0 {
                continue;
            }
            // max of k iid draws is F⁻¹(U^(1/k)); it only matters if above `max`
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            if max.is_finite() && u <= t.sampler.cdf(max).powf(k as f64) {
                continue;
            }
            let survival = -(u.ln() / k as f64).exp_m1();
            max = max.max(t.sampler.quantile_from_survival(survival));
        }
    }
    max
}

/// Monte Carlo 1-in-T value from `mc_years` simulated annual maxima.
pub fn true_quantile(spec: &MixtureSpec, period: f64, mc_years: u64, seed: u64) -> Result<TruthRecord> {
    spec.validate()?;
    if !(period > 1.0) {
        return Err(Error::domain(format!("return period must be > 1 year, got {period}")));
    }
    if (mc_years as f64) < period || mc_years < TRUTH_BATCHES as u64 {
        return Err(Error::domain(format!(
            "{mc_years} Monte Carlo years cannot resolve a 1-in-{period} value"
        )));
    }
    let concrete = spec.for_cell(0, seed);
    let compiled = Compiled::new(&concrete);
    let mut days_per_season = [0u64; 4];
    for s in compiled.day_season {
        days_per_season[s.index()] += 1;
    }
    let mut maxima: Vec<f64> = (0..mc_years)
        .into_par_iter()
        .map(|y| {
            let mut rng = CounterRng::new(seed, TRUTH_STREAM, y);
            simulate_annual_max(&compiled, &days_per_season, &mut rng)
        })
        .collect();
    let prob = 1.0 - 1.0 / period;
    let batch = mc_years as usize / TRUTH_BATCHES;
    let batch_q: Vec<f64> = maxima
        .chunks_mut(batch)
        .take(TRUTH_BATCHES)
        .map(|c| quantile_unsorted(c, prob))
        .collect();
    let mean = batch_q.iter().sum::<f64>() / TRUTH_BATCHES as f64;
    let var = batch_q.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (TRUTH_BATCHES - 1) as f64;
    let value = quantile_unsorted(&mut maxima, prob);
    Ok(TruthRecord {
        spec: concrete,
        period,
        value,
        mc_se: (var / TRUTH_BATCHES as f64).sqrt(),
        mc_years,
    })
}

fn storm(name: &str, probability: f64, magnitude: Magnitude) -> StormType {
    StormType { name: name.into(), probability, magnitude }
}

/// Built-in specs.
pub fn preset(name: &str) -> Result<MixtureSpec> {
    let spec = match name {
        "precip-mixture" => {
            let convective = |p: f64| storm("convective", p, Magnitude::Gamma { shape: 0.8, scale: 4.0 });
            let tropical = storm(
                "tropical",
                1.0 / 91.0,
                Magnitude::Gpd { threshold: 10.0, scale: 15.0, shape: 0.05 },
            );
            MixtureSpec {
                name: name.into(),
                variable: "pr".into(),
                units: "mm/day".into(),
                quiet_value: 0.0,
                baseline: None,
                cells: 1,
                jitter: 0.0,
                djf: vec![convective(0.25)],
                mam: vec![convective(0.3)],
                jja: vec![convective(0.35), tropical.clone()],
                son: vec![convective(0.3), tropical],
            }
        }
        "precip-homogeneous" => {
            let wet = storm("wet", 0.3, Magnitude::Gpd { threshold: 0.0, scale: 8.0, shape: 0.1 });
            MixtureSpec {
                name: name.into(),
                variable: "pr".into(),
                units: "mm/day".into(),
                quiet_value: 0.0,
                baseline: None,
                cells: 1,
                jitter: 0.0,
                djf: vec![wet.clone()],
                mam: vec![wet.clone()],
                jja: vec![wet.clone()],
                son: vec![wet],
            }
        }
        "temperature-bounded" => {
            let noise = storm("anomaly", 1.0, Magnitude::Gev { location: 0.0, scale: 3.0, shape: -0.2 });
            MixtureSpec {
                name: name.into(),
                variable: "tasmax".into(),
                units: "K".into(),
                quiet_value: 0.0,
                baseline: Some(Sinusoid { mean: 290.0, amplitude: 12.0, peak_day: 200.0 }),
                cells: 1,
                jitter: 0.0,
                djf: vec![noise.clone()],
                mam: vec![noise.clone()],
                jja: vec![noise.clone()],
                son: vec![noise],
            }
        }
        other => {
            return Err(Error::Spec(format!(
                "unknown preset {other:?}; available presets: {}",
                PRESETS.join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}
