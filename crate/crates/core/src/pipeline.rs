//! Per-cell analyses run over a bounded worker pool.
//!
//! Cells are pulled from the input in batches of `batch_size`, analysed in
//! parallel, and the resulting rows are sorted before anything is written,
//! so reports do not depend on scheduling or the number of workers.

use crate::aep::aep_with_uncertainty;
use crate::calendar::DailySeries;
use crate::config::{InputSource, PipelineConfig};
use crate::csv_io::read_csv;
use crate::empirical::{annual_maxima, empirical_aep_with_guard};
use crate::error::{Error, Result};
use crate::fitting::fit_gev;
use crate::report::{sort_rows, write_report, Method, ReportRow};
use crate::seasonal::{seasonal_fit_approach1, seasonal_fit_approach2, SeasonalResult};
use crate::store::StoreReader;
use crate::synthetic::{generate_cell, MixtureSpec};
use crate::threshold::{build_schedule, run_sweep, ThresholdSchedule, REFERENCE_TAIL_PROBABILITY};
use rayon::prelude::*;
use std::path::PathBuf;

/// A cell waiting to be analysed; synthetic cells are generated by the worker.
enum Job {
    Ready(DailySeries),
    Synthetic(u64),
}

struct Jobs {
    inner: Box<dyn Iterator<Item = Result<Job>>>,
}

impl Jobs {
    fn open(source: &InputSource) -> Result<Jobs> {
        let inner: Box<dyn Iterator<Item = Result<Job>>> = match source {
            InputSource::Store(path) => Box::new(StoreReader::open(path)?.map(|r| r.map(Job::Ready))),
            InputSource::Csv { path, variable, units } => {
                Box::new(read_csv(path, variable, units)?.into_iter().map(|s| Ok(Job::Ready(s))))
            }
            InputSource::Synthetic { cells, .. } => Box::new((0..*cells as u64).map(|c| Ok(Job::Synthetic(c)))),
        };
        Ok(Jobs { inner })
    }

    fn next_batch(&mut self, size: usize) -> Result<Vec<Job>> {
        self.inner.by_ref().take(size).collect()
    }
}

fn realize(job: Job, synth: Option<(&MixtureSpec, u32)>, seed: u64) -> Result<DailySeries> {
    match job {
        Job::Ready(s) => Ok(s),
        Job::Synthetic(cell) => {
            let (spec, years) = synth.expect("synthetic jobs come from a synthetic source");
            generate_cell(spec, cell, years, seed)
        }
    }
}

/// Schedule for a record of `n_days` under the config's schedule settings.
pub fn schedule_for(cfg: &PipelineConfig, n_days: usize) -> Result<ThresholdSchedule> {
    let s = &cfg.schedule;
    match &s.tail_probabilities {
        Some(q) => ThresholdSchedule::from_probabilities(n_days, q.clone()),
        None => build_schedule(n_days, s.q_max, s.q_min, s.thresholds),
    }
}

/// All report rows of one cell. Analysis failures become rows with
/// `converged = false` and a note; they never abort the run.
pub fn analyze_cell(series: &DailySeries, cfg: &PipelineConfig) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    let id = series.id.as_str();
    let periods = &cfg.periods;
    let failed = |rows: &mut Vec<ReportRow>, method, q, note: &str| {
        rows.extend(periods.iter().map(|&t| ReportRow::blank(id, method, q, t).with_note(note)));
    };
    let needs_schedule = cfg.methods.iter().any(|m| matches!(m, Method::Pot | Method::Seasonal1 | Method::Seasonal2));
    let schedule = if needs_schedule { Some(schedule_for(cfg, series.values.len())) } else { None };

    for &method in &cfg.methods {
        match method {
            Method::Gev => match annual_maxima(series).and_then(|m| fit_gev(&m.values, &cfg.optimizer)) {
                Ok(fit) => {
                    for &t in periods {
                        let row = ReportRow::blank(id, method, None, t).with_fit(&fit);
                        rows.push(match aep_with_uncertainty(&fit, t) {
                            Ok(est) => row.with_estimate(&est),
                            Err(e) => row.with_note(e.to_string()),
                        });
                    }
                }
                Err(e) => failed(&mut rows, method, None, &e.to_string()),
            },
            Method::Empirical => match annual_maxima(series) {
                Ok(m) => {
                    for &t in periods {
                        let mut row = ReportRow::blank(id, method, None, t);
                        row.n_used = m.n_years();
                        match empirical_aep_with_guard(&m.values, t, cfg.empirical_years_per_period) {
                            Ok(v) => {
                                row.value = Some(v);
                                row.converged = true;
                            }
                            Err(e) => row.note = e.to_string(),
                        }
                        rows.push(row);
                    }
                }
                Err(e) => failed(&mut rows, method, None, &e.to_string()),
            },
            Method::Pot => match &schedule {
                Some(Ok(schedule)) => {
                    let sweep = run_sweep(&series.values, series.n_years() as f64, schedule, periods, &cfg.optimizer);
                    for r in &sweep {
                        for &t in periods {
                            let mut row = ReportRow::blank(id, method, Some(r.tail_probability), t);
                            row.threshold = r.threshold;
                            row.n_used = r.n_exceedances;
                            if let Some(fit) = &r.fit {
                                row = row.with_fit(fit);
                            }
                            match r.aep_for(t) {
                                Some(est) => row = row.with_estimate(est),
                                None => row.converged = false,
                            }
                            if let Some(e) = &r.error {
                                row.note = e.clone();
                            }
                            rows.push(row);
                        }
                    }
                }
                Some(Err(e)) => failed(&mut rows, method, None, &e.to_string()),
                None => unreachable!(),
            },
            Method::Seasonal1 | Method::Seasonal2 => match &schedule {
                Some(Ok(schedule)) => {
                    let results = if method == Method::Seasonal1 {
                        seasonal_fit_approach1(series, schedule, periods, &cfg.optimizer)
                    } else {
                        seasonal_fit_approach2(series, schedule, periods, &cfg.optimizer)
                    };
                    match results {
                        Ok(results) => rows.extend(seasonal_rows(id, method, &results, periods)),
                        Err(e) => failed(&mut rows, method, None, &e.to_string()),
                    }
                }
                Some(Err(e)) => failed(&mut rows, method, None, &e.to_string()),
                None => unreachable!(),
            },
        }
    }
    rows
}

fn seasonal_rows(id: &str, method: Method, results: &[SeasonalResult], periods: &[f64]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for res in results {
        for (i, &t) in periods.iter().enumerate() {
            let mut row = ReportRow::blank(id, method, Some(res.tail_probability), t);
            row.threshold = Some(res.full_year_threshold);
            row.n_used = res.count;
            match (res.combined[i], res.combined_from[i]) {
                (Some(est), Some(season)) => {
                    let fit = res.seasons.iter().find(|s| s.season == season).and_then(|s| s.fit.as_ref());
                    if let Some(fit) = fit {
                        row = row.with_fit(fit);
                        row.threshold = fit.threshold;
                    }
                    row = row.with_estimate(&est);
                    row.season = Some(season);
                }
                _ => {
                    let why: Vec<String> = res
                        .seasons
                        .iter()
                        .filter_map(|s| s.absent.as_ref().map(|a| format!("{}: {a}", s.season)))
                        .collect();
                    row.note = if why.is_empty() { "no season present".into() } else { why.join("; ") };
                }
            }
            rows.push(row);
        }
    }
    rows
}

/// Rows for every cell, in report order.
pub fn collect_rows(cfg: &PipelineConfig) -> Result<Vec<ReportRow>> {
    cfg.validate()?;
    let source = cfg.source()?;
    let workers = cfg.resolved_workers()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    let synth = match &source {
        InputSource::Synthetic { spec, years, .. } => Some((spec, *years)),
        _ => None,
    };
    let mut jobs = Jobs::open(&source)?;
    let mut rows = Vec::new();
    loop {
        let batch = jobs.next_batch(cfg.batch_size)?;
        if batch.is_empty() {
            break;
        }
        let batch_rows: Vec<Vec<ReportRow>> = pool.install(|| {
            batch
                .into_par_iter()
                .map(|job| realize(job, synth, cfg.seed).map(|s| analyze_cell(&s, cfg)))
                .collect::<Result<_>>()
        })?;
        rows.extend(batch_rows.into_iter().flatten());
    }
    sort_rows(&mut rows);
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub rows: Vec<ReportRow>,
    pub files: Vec<PathBuf>,
}

/// Runs every configured analysis and writes the report files.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let rows = collect_rows(cfg)?;
    let reference = rows
        .iter()
        .filter(|r| r.method == Method::Pot)
        .filter_map(|r| r.tail_probability)
        .min_by(|a, b| {
            let target = REFERENCE_TAIL_PROBABILITY.ln();
            (a.ln() - target).abs().total_cmp(&(b.ln() - target).abs())
        })
        .unwrap_or(REFERENCE_TAIL_PROBABILITY);
    let files = write_report(&cfg.output_dir, &rows, reference)?;
    Ok(PipelineOutput { rows, files })
}
