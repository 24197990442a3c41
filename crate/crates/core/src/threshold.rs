//! Log-spaced threshold schedules and fits across them.

use crate::aep::{aep_with_uncertainty, AepEstimate};
use crate::error::{Error, Result};
use crate::fitting::{fit_pp_exceedances, FitResult, OptimizerSettings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_Q_MAX: f64 = 1e-3;
pub const DEFAULT_Q_MIN: f64 = 1e-5;
pub const DEFAULT_THRESHOLDS: usize = 10;
/// Tail probability of the stability reference row (n = 499 in the full ensemble).
pub const REFERENCE_TAIL_PROBABILITY: f64 = 1.291_549_665_014_884e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    /// Descending.
    pub tail_probabilities: Vec<f64>,
    /// `ceil(N·q)`, strictly decreasing.
    pub exceedance_counts: Vec<usize>,
    pub n_observations: usize,
}

/// `ceil`, ignoring floating noise within 1e-9 relative of an integer.
fn robust_ceil(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// `k` tail probabilities log-spaced from `q_max` down to `q_min` inclusive,
/// with exceedance counts `ceil(N·q)`.
pub fn build_schedule(n_observations: usize, q_max: f64, q_min: f64, k: usize) -> Result<ThresholdSchedule> {
    if !(q_min > 0.0 && q_min < q_max && q_max < 1.0) {
        return Err(Error::Schedule(format!(
            "need 0 < q_min < q_max < 1, got q_min = {q_min}, q_max = {q_max}"
        )));
    }
    if k < 2 {
        return Err(Error::Schedule(format!("need at least 2 thresholds, got {k}")));
    }
    let (hi, lo) = (q_max.log10(), q_min.log10());
    let probs: Vec<f64> = (0..k)
        .map(|j| match j {
            0 => q_max,
            j if j == k - 1 => q_min,
            j => 10f64.powf(hi + (lo - hi) * j as f64 / (k - 1) as f64),
        })
        .collect();
    ThresholdSchedule::from_probabilities(n_observations, probs)
}

impl ThresholdSchedule {
    pub fn from_probabilities(n_observations: usize, tail_probabilities: Vec<f64>) -> Result<Self> {
        if tail_probabilities.is_empty() {
            return Err(Error::Schedule("empty schedule".into()));
        }
        if tail_probabilities.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::Schedule("tail probabilities must lie in (0, 1)".into()));
        }
        if tail_probabilities.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Schedule("tail probabilities must be strictly decreasing".into()));
        }
        let exceedance_counts: Vec<usize> = tail_probabilities
            .iter()
            .map(|q| robust_ceil(n_observations as f64 * q))
            .collect();
        if exceedance_counts.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::Schedule(format!(
                "{n_observations} observations give non-decreasing counts {exceedance_counts:?}"
            )));
        }
        Ok(ThresholdSchedule { tail_probabilities, exceedance_counts, n_observations })
    }

    pub fn len(&self) -> usize {
        self.tail_probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tail_probabilities.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.tail_probabilities.iter().copied().zip(self.exceedance_counts.iter().copied())
    }

    /// Count of the entry whose tail probability is log-closest to
    /// [`REFERENCE_TAIL_PROBABILITY`].
    pub fn reference_count(&self) -> usize {
        self.reference_entry().1
    }

    /// Tail probability of the reference entry.
    pub fn reference_tail_probability(&self) -> f64 {
        self.reference_entry().0
    }

    fn reference_entry(&self) -> (f64, usize) {
        let target = REFERENCE_TAIL_PROBABILITY.ln();
        self.entries()
            .min_by(|a, b| (a.0.ln() - target).abs().total_cmp(&(b.0.ln() - target).abs()))
            .expect("schedule is non-empty")
    }

    /// Drops the `n` highest thresholds (smallest counts).
    pub fn without_highest(&self, n: usize) -> Self {
        let keep = self.len().saturating_sub(n);
        ThresholdSchedule {
            tail_probabilities: self.tail_probabilities[..keep].to_vec(),
            exceedance_counts: self.exceedance_counts[..keep].to_vec(),
            n_observations: self.n_observations,
        }
    }
}

/// Threshold and the values strictly above it.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub threshold: f64,
    /// Descending.
    pub exceedances: Vec<f64>,
    pub requested: usize,
}

impl Selection {
    /// Differs from `requested` only when values tie at the threshold.
    pub fn actual(&self) -> usize {
        self.exceedances.len()
    }
}

/// Daily values sorted once for repeated selections.
#[derive(Debug, Clone)]
pub struct SortedValues {
    descending: Vec<f64>,
}

impl SortedValues {
    pub fn new(values: &[f64]) -> Self {
        let mut descending = values.to_vec();
        descending.sort_by(|a, b| b.total_cmp(a));
        SortedValues { descending }
    }

    pub fn len(&self) -> usize {
        self.descending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descending.is_empty()
    }

    /// Threshold at the (n+1)-th largest value; exceedances strictly above it.
    pub fn select(&self, n: usize) -> Result<Selection> {
        if n >= self.descending.len() {
            return Err(Error::domain(format!(
                "cannot select {n} exceedances from {} values",
                self.descending.len()
            )));
        }
        let threshold = self.descending[n];
        let count = self.descending[..n].partition_point(|&v| v > threshold);
        Ok(Selection { threshold, exceedances: self.descending[..count].to_vec(), requested: n })
    }

    /// Values strictly above `u`, descending.
    pub fn above(&self, u: f64) -> &[f64] {
        let count = self.descending.partition_point(|&v| v > u);
        &self.descending[..count]
    }
}

pub fn select_exceedances(daily: &[f64], n: usize) -> Result<Selection> {
    SortedValues::new(daily).select(n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tail_probability: f64,
    pub requested_count: usize,
    pub threshold: Option<f64>,
    pub n_exceedances: usize,
    pub fit: Option<FitResult>,
    pub aep: Vec<AepEstimate>,
    /// Why the row has no usable fit.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.fit.as_ref().is_some_and(|f| f.converged)
    }

    pub fn xi(&self) -> Option<f64> {
        self.fit.as_ref().filter(|f| f.converged).map(|f| f.params.xi)
    }

    pub fn aep_for(&self, period: f64) -> Option<&AepEstimate> {
        self.aep.iter().find(|a| a.period == period)
    }
}

/// Point-process fit and AEP values for exceedances of `u`.
pub fn fit_and_estimate(
    exceedances: &[f64],
    u: f64,
    n_years: f64,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> (Option<FitResult>, Vec<AepEstimate>, Option<String>) {
    match fit_pp_exceedances(exceedances, u, n_years, settings) {
        Ok(fit) if fit.converged => {
            let mut aep = Vec::with_capacity(periods.len());
            let mut error = None;
            for &t in periods {
                match aep_with_uncertainty(&fit, t) {
                    Ok(a) => aep.push(a),
                    Err(e) => error = Some(e.to_string()),
                }
            }
            (Some(fit), aep, error)
        }
        Ok(fit) => (Some(fit), Vec::new(), Some(Error::NotConverged.to_string())),
        Err(e) => (None, Vec::new(), Some(e.to_string())),
    }
}

pub fn sweep_row(
    sorted: &SortedValues,
    tail_probability: f64,
    count: usize,
    n_years: f64,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> SweepRow {
    match sorted.select(count) {
        Ok(sel) => {
            let (fit, aep, error) = fit_and_estimate(&sel.exceedances, sel.threshold, n_years, periods, settings);
            SweepRow {
                tail_probability,
                requested_count: count,
                threshold: Some(sel.threshold),
                n_exceedances: sel.actual(),
                fit,
                aep,
                error,
            }
        }
        Err(e) => SweepRow {
            tail_probability,
            requested_count: count,
            threshold: None,
            n_exceedances: 0,
            fit: None,
            aep: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// One row per schedule entry, in schedule order.
pub fn run_sweep(
    daily: &[f64],
    n_years: f64,
    schedule: &ThresholdSchedule,
    periods: &[f64],
    settings: &OptimizerSettings,
) -> Vec<SweepRow> {
    let sorted = SortedValues::new(daily);
    let entries: Vec<(f64, usize)> = schedule.entries().collect();
    entries
        .par_iter()
        .map(|&(q, n)| sweep_row(&sorted, q, n, n_years, periods, settings))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub tail_probability: f64,
    pub count: usize,
    /// `ξ̂ − ξ̂_ref`; `None` for unconverged rows.
    pub xi_difference: Option<f64>,
    /// `(T, AEP/AEP_ref)`.
    pub aep_ratios: Vec<(f64, Option<f64>)>,
}

/// Differences and ratios against the row with `reference_count`.
pub fn stability_report(rows: &[SweepRow], reference_count: usize) -> Result<Vec<StabilityRow>> {
    let reference = rows
        .iter()
        .find(|r| r.requested_count == reference_count)
        .ok_or_else(|| Error::domain(format!("no sweep row with reference count {reference_count}")))?;
    let xi_ref = reference
        .xi()
        .ok_or_else(|| Error::domain(format!("reference row (count {reference_count}) did not converge")))?;
    Ok(rows
        .iter()
        .map(|row| StabilityRow {
            tail_probability: row.tail_probability,
            count: row.requested_count,
            xi_difference: row.xi().map(|xi| xi - xi_ref),
            aep_ratios: reference
                .aep
                .iter()
                .map(|r| (r.period, row.aep_for(r.period).map(|a| a.value / r.value)))
                .collect(),
        })
        .collect())
}
