//! Pipeline configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//! methods = ["gev", "pot", "seasonal-1", "seasonal-2", "empirical"]
//! periods = [100.0, 1000.0]
//! workers = 4          # optional; else EVA_WORKERS, else all cores
//! batch_size = 8       # cells held in memory at once
//!
//! [input]
//! store = "cells.eva"  # or: csv = "cells.csv"
//!                      # or: synthetic = "precip-mixture" (preset or spec file)
//! cells = 20           # synthetic only
//! years = 1000         # synthetic only
//!
//! [schedule]
//! q_max = 1e-3
//! q_min = 1e-5
//! thresholds = 10
//! ```

use crate::error::{Error, Result};
use crate::fitting::OptimizerSettings;
use crate::report::Method;
use crate::synthetic::{preset, MixtureSpec};
use crate::threshold::{DEFAULT_Q_MAX, DEFAULT_Q_MIN, DEFAULT_THRESHOLDS};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "EVA_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub store: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    /// Preset name or path to a mixture spec file.
    pub synthetic: Option<String>,
    #[serde(default = "default_variable")]
    pub variable: String,
    #[serde(default = "default_units")]
    pub units: String,
    /// Overrides the spec's cell count.
    pub cells: Option<usize>,
    #[serde(default = "default_years")]
    pub years: u32,
}

fn default_variable() -> String {
    "pr".into()
}

fn default_units() -> String {
    "mm/day".into()
}

fn default_years() -> u32 {
    1000
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            store: None,
            csv: None,
            synthetic: None,
            variable: default_variable(),
            units: default_units(),
            cells: None,
            years: default_years(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub q_max: f64,
    pub q_min: f64,
    pub thresholds: usize,
    /// Explicit descending tail probabilities; replaces the log-spaced schedule.
    #[serde(default)]
    pub tail_probabilities: Option<Vec<f64>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { q_max: DEFAULT_Q_MAX, q_min: DEFAULT_Q_MIN, thresholds: DEFAULT_THRESHOLDS, tail_probabilities: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub methods: Vec<Method>,
    pub periods: Vec<f64>,
    pub schedule: ScheduleConfig,
    pub optimizer: OptimizerSettings,
    /// Years of record required per year of return period for empirical values.
    pub empirical_years_per_period: f64,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputConfig::default(),
            methods: Method::ALL.to_vec(),
            periods: vec![100.0, 1000.0],
            schedule: ScheduleConfig::default(),
            optimizer: OptimizerSettings::default(),
            empirical_years_per_period: crate::empirical::DEFAULT_YEARS_PER_PERIOD,
            output_dir: PathBuf::from("out"),
            workers: None,
            batch_size: 8,
            seed: 0,
        }
    }
}

/// Where the cells come from, after validation.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Store(PathBuf),
    Csv { path: PathBuf, variable: String, units: String },
    Synthetic { spec: MixtureSpec, cells: usize, years: u32 },
}

/// Command-line values that replace config entries when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub store: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub cells: Option<usize>,
    pub years: Option<u32>,
    pub methods: Option<Vec<Method>>,
    pub periods: Option<Vec<f64>>,
    pub q_max: Option<f64>,
    pub q_min: Option<f64>,
    pub thresholds: Option<usize>,
    pub tail_probabilities: Option<Vec<f64>>,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Loads a config file; relative paths in it are taken from its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.input.store.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.input.csv.as_mut() {
            rebase(p);
        }
        if let Some(s) = cfg.input.synthetic.as_mut() {
            if preset(s).is_err() && Path::new(s).is_relative() {
                *s = base.join(&*s).to_string_lossy().into_owned();
            }
        }
        rebase(&mut cfg.output_dir);
        Ok(cfg)
    }

    /// Flags win over file values. Giving one input kind clears the others.
    pub fn apply(&mut self, o: &Overrides) {
        if o.store.is_some() || o.csv.is_some() || o.synthetic.is_some() {
            self.input.store = o.store.clone();
            self.input.csv = o.csv.clone();
            self.input.synthetic = o.synthetic.clone();
        }
        if let Some(v) = o.cells {
            self.input.cells = Some(v);
        }
        if let Some(v) = o.years {
            self.input.years = v;
        }
        if let Some(v) = &o.methods {
            self.methods = v.clone();
        }
        if let Some(v) = &o.periods {
            self.periods = v.clone();
        }
        if let Some(v) = o.q_max {
            self.schedule.q_max = v;
        }
        if let Some(v) = o.q_min {
            self.schedule.q_min = v;
        }
        if let Some(v) = o.thresholds {
            self.schedule.thresholds = v;
        }
        if let Some(v) = &o.tail_probabilities {
            self.schedule.tail_probabilities = Some(v.clone());
        }
        if let Some(v) = &o.output_dir {
            self.output_dir = v.clone();
        }
        if let Some(v) = o.workers {
            self.workers = Some(v);
        }
        if let Some(v) = o.batch_size {
            self.batch_size = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        if self.periods.is_empty() {
            return Err(Error::Config("no return periods given".into()));
        }
        if let Some(t) = self.periods.iter().find(|t| !(**t > 1.0 && t.is_finite())) {
            return Err(Error::Config(format!("return periods must be finite and > 1, got {t}")));
        }
        let s = &self.schedule;
        if let Some(q) = &s.tail_probabilities {
            let ok = !q.is_empty() && q.iter().all(|q| *q > 0.0 && *q < 1.0) && q.windows(2).all(|w| w[0] > w[1]);
            if !ok {
                return Err(Error::Config(format!(
                    "schedule.tail_probabilities must be non-empty, strictly decreasing and inside (0, 1), got {q:?}"
                )));
            }
        } else if !(s.q_min > 0.0 && s.q_min < s.q_max && s.q_max < 1.0) || s.thresholds < 2 {
            return Err(Error::Config(format!(
                "schedule needs 0 < q_min < q_max < 1 and at least 2 thresholds, got {} .. {} × {}",
                s.q_max, s.q_min, s.thresholds
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if !(self.empirical_years_per_period > 0.0) {
            return Err(Error::Config("empirical_years_per_period must be > 0".into()));
        }
        self.source().map(|_| ())
    }

    /// Validated input source.
    pub fn source(&self) -> Result<InputSource> {
        let i = &self.input;
        let given = [i.store.is_some(), i.csv.is_some(), i.synthetic.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::Config("give exactly one of input.store, input.csv, input.synthetic".into()));
        }
        if let Some(p) = &i.store {
            return Ok(InputSource::Store(p.clone()));
        }
        if let Some(p) = &i.csv {
            return Ok(InputSource::Csv { path: p.clone(), variable: i.variable.clone(), units: i.units.clone() });
        }
        let name = i.synthetic.as_deref().expect("checked above");
        let spec = load_spec(name)?;
        if i.years == 0 {
            return Err(Error::Config("input.years must be >= 1".into()));
        }
        let cells = i.cells.unwrap_or(spec.cells);
        if cells == 0 {
            return Err(Error::Config("input.cells must be >= 1".into()));
        }
        Ok(InputSource::Synthetic { spec, cells, years: i.years })
    }

    /// Flag or file value, then `EVA_WORKERS`, then the number of cores.
    pub fn resolved_workers(&self) -> Result<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}"))),
            },
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// A preset name, or else a spec file path.
pub fn load_spec(name_or_path: &str) -> Result<MixtureSpec> {
    match preset(name_or_path) {
        Ok(spec) => Ok(spec),
        Err(preset_err) => {
            let path = Path::new(name_or_path);
            if path.exists() {
                MixtureSpec::load(path)
            } else {
                Err(Error::Config(format!("{name_or_path:?} is neither a spec file nor a preset: {preset_err}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_override() {
        let text = r#"
            seed = 7
            methods = ["pot", "gev"]
            periods = [10.0, 100.0]
            [input]
            store = "cells.eva"
            [schedule]
            q_max = 1e-2
            q_min = 1e-3
            thresholds = 3
        "#;
        let mut cfg = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.methods, vec![Method::Pot, Method::Gev]);
        assert_eq!(cfg.optimizer, OptimizerSettings::default());
        assert!(matches!(cfg.source().unwrap(), InputSource::Store(_)));
        cfg.apply(&Overrides { synthetic: Some("precip-mixture".into()), cells: Some(3), seed: Some(9), ..Default::default() });
        assert_eq!(cfg.seed, 9);
        assert!(cfg.input.store.is_none());
        match cfg.source().unwrap() {
            InputSource::Synthetic { cells, .. } => assert_eq!(cells, 3),
            other => panic!("{other:?}"),
        }
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(PipelineConfig::from_toml_str("bogus = 1").is_err());
        assert!(PipelineConfig::from_toml_str("methods = [\"lmoments\"]").is_err());
        let cfg = PipelineConfig::default();
        // no input
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.input.synthetic = Some("no-such-preset".into());
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.input.synthetic = Some("precip-mixture".into());
        cfg.periods = vec![1.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "output_dir = \"res\"\n[input]\nstore = \"a.eva\"\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("res"));
        assert_eq!(cfg.input.store.unwrap(), dir.path().join("a.eva"));
    }

    #[test]
    fn explicit_workers_win() {
        let cfg = PipelineConfig { workers: Some(3), ..Default::default() };
        assert_eq!(cfg.resolved_workers().unwrap(), 3);
    }
}
