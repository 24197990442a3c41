//! `eva`: command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or argument error, 2 I/O error.

use clap::{Args, Parser, Subcommand};
use eva_core::config::{load_spec, Overrides, PipelineConfig};
use eva_core::csv_io::write_csv;
use eva_core::error::Error;
use eva_core::pipeline::{collect_rows, run_pipeline};
use eva_core::report::{rows_to_csv, rows_to_json, Method};
use eva_core::store::StoreWriter;
use eva_core::synthetic::{generate_cell, true_quantile};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "eva", version, about = "Extreme value analysis of large daily ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic cells from a preset or spec file.
    Synth(SynthArgs),
    /// Annual-maximum GEV fits.
    FitGev(RunArgs),
    /// Point-process fits at one or more tail probabilities.
    FitPot {
        #[command(flatten)]
        run: RunArgs,
        /// Tail probability of the threshold (repeatable).
        #[arg(long = "tail-probability", value_name = "Q", default_value = "1.291549665014884e-4")]
        tail_probability: Vec<f64>,
    },
    /// Point-process fits across the whole threshold schedule.
    Sweep(RunArgs),
    /// Season-stratified fits combined into overall values.
    Seasonal {
        #[command(flatten)]
        run: RunArgs,
        /// 1 = full-year thresholds per season, 2 = same count per season.
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        approach: Vec<u8>,
    },
    /// Model-free values from annual-maximum order statistics.
    Empirical(RunArgs),
    /// Full report plus scatter tables, written to the output directory.
    Report(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Preset name (precip-mixture, precip-homogeneous, temperature-bounded) or spec file.
    #[arg(long, default_value = "precip-mixture")]
    spec: String,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long, default_value_t = 100)]
    years: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.csv` writes long-format CSV, anything else the binary store.
    #[arg(long)]
    out: PathBuf,
    /// Also print the Monte Carlo 1-in-T value of cell 0 as JSON.
    #[arg(long, value_name = "T")]
    truth_period: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    mc_years: u64,
    /// Print the resolved spec as TOML and exit.
    #[arg(long)]
    print_spec: bool,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Binary store input.
    #[arg(long, conflicts_with_all = ["csv", "synthetic"])]
    store: Option<PathBuf>,
    /// Long-format CSV input (date, cell_id, value).
    #[arg(long, conflicts_with = "synthetic")]
    csv: Option<PathBuf>,
    /// Generate cells on the fly from a preset or spec file.
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    years: Option<u32>,
    /// Return periods in years (repeatable or comma-separated).
    #[arg(long = "period", value_delimiter = ',')]
    periods: Vec<f64>,
    /// Methods for `report` (repeatable or comma-separated).
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    q_max: Option<f64>,
    #[arg(long)]
    q_min: Option<f64>,
    #[arg(long)]
    thresholds: Option<usize>,
    /// Output directory for `report`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads [env: EVA_WORKERS].
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print JSON instead of CSV.
    #[arg(long)]
    json: bool,
}

impl RunArgs {
    fn config(&self, methods: Option<Vec<Method>>, tail_probabilities: Option<Vec<f64>>) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let parsed: Option<Vec<Method>> = if self.methods.is_empty() {
            None
        } else {
            Some(self.methods.iter().map(|m| m.parse()).collect::<Result<_, _>>()?)
        };
        cfg.apply(&Overrides {
            store: self.store.clone(),
            csv: self.csv.clone(),
            synthetic: self.synthetic.clone(),
            cells: self.cells,
            years: self.years,
            methods: methods.or(parsed),
            periods: (!self.periods.is_empty()).then(|| self.periods.clone()),
            q_max: self.q_max,
            q_min: self.q_min,
            thresholds: self.thresholds,
            tail_probabilities,
            output_dir: self.output_dir.clone(),
            workers: self.workers,
            batch_size: self.batch_size,
            seed: self.seed,
        });
        Ok(cfg)
    }
}

fn print_rows(cfg: &PipelineConfig, json: bool) -> Result<(), Error> {
    let rows = collect_rows(cfg)?;
    if json {
        println!("{}", rows_to_json(&rows)?);
    } else {
        print!("{}", rows_to_csv(&rows));
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<(), Error> {
    let mut spec = load_spec(&a.spec)?;
    if let Some(c) = a.cells {
        spec.cells = c;
    }
    spec.validate()?;
    if a.print_spec {
        print!("{}", spec.to_toml_string()?);
        return Ok(());
    }
    let cells: Vec<_> = (0..spec.cells as u64)
        .map(|c| generate_cell(&spec, c, a.years, a.seed))
        .collect::<Result<_, _>>()?;
    if a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_csv(&a.out, &cells)?;
    } else {
        let mut w = StoreWriter::create(&a.out, cells.len() as u32)?;
        for c in &cells {
            w.write_cell(c)?;
        }
        w.finish()?;
    }
    if let Some(t) = a.truth_period {
        let truth = true_quantile(&spec, t, a.mc_years, a.seed)?;
        let text = serde_json::to_string_pretty(&truth).map_err(|e| Error::Config(e.to_string()))?;
        println!("{text}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::FitGev(r) => print_rows(&r.config(Some(vec![Method::Gev]), None)?, r.json),
        Command::FitPot { run, tail_probability } => {
            let mut q = tail_probability;
            q.sort_by(|a, b| b.total_cmp(a));
            q.dedup();
            print_rows(&run.config(Some(vec![Method::Pot]), Some(q))?, run.json)
        }
        Command::Sweep(r) => print_rows(&r.config(Some(vec![Method::Pot]), None)?, r.json),
        Command::Seasonal { run, approach } => {
            let methods = if approach.is_empty() {
                vec![Method::Seasonal1, Method::Seasonal2]
            } else {
                approach.iter().map(|a| if *a == 1 { Method::Seasonal1 } else { Method::Seasonal2 }).collect()
            };
            print_rows(&run.config(Some(methods), None)?, run.json)
        }
        Command::Empirical(r) => print_rows(&r.config(Some(vec![Method::Empirical]), None)?, r.json),
        Command::Report(r) => {
            let out = run_pipeline(&r.config(None, None)?)?;
            for f in &out.files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Format { .. } | Error::Csv(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eva: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
