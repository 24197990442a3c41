//! Extreme value analysis for huge ensembles of daily series.
//!
//! Block-maxima (GEV) and threshold-exceedance (point-process) maximum
//! likelihood fits, 1-in-T annual exceedance probability values with
//! delta-method standard errors, threshold sweeps, seasonal stratification,
//! empirical validation and synthetic storm-type-mixture ensembles.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aep;
pub mod calendar;
pub mod config;
pub mod csv_io;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod fitting;
pub mod optimize;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod seasonal;
pub mod store;
pub mod synthetic;
pub mod threshold;

pub use aep::{aep_with_uncertainty, return_level, return_level_gradient, AepEstimate};
pub use calendar::{Calendar, DailySeries};
pub use distributions::{GevParams, GpdParams, SupportBounds};
pub use error::{Error, Result};
pub use fitting::{fit_gev, fit_pot, FitResult, OptimizerSettings};
pub use seasonal::Season;
pub use synthetic::{generate_cell, preset, true_quantile, MixtureSpec, TruthRecord};
pub use threshold::{build_schedule, run_sweep, select_exceedances, ThresholdSchedule};
