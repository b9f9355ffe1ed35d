//! Command-line front end: every subcommand writes one CSV table.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rfid_motion::experiments::detection::{detection_table, run_detection_experiment};
use rfid_motion::experiments::figures::{figure_dataset, FigureOptions};
use rfid_motion::experiments::mcrb::{check_tightness, mcrb_table, run_mcrb_experiment};
use rfid_motion::experiments::reports::{bounds_table, noise_figure_report, vmin_table};
use rfid_motion::experiments::{ConfigBuilder, CsvTable, ExperimentConfig};
use rfid_motion::par::Execution;
use rfid_motion::Error;

/// Variance ratio band accepted by `simulate-mcrb --check`.
const TIGHTNESS: (f64, f64) = (0.9, 1.15);

#[derive(Parser, Debug)]
#[command(
    name = "rfid-motion",
    version,
    about = "Doppler motion-detection bounds for UHF RFID"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for simulations.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Monte Carlo trials per grid point.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Extra reader modes (flat file, `label` starts each mode).
    #[arg(long, global = true)]
    modes_file: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set p_err=1e-2`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Run trials on one thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tolerable variance, MCRB and v_min over the speed grid.
    Bounds,
    /// Minimum detectable speed per reply-part selection.
    Vmin,
    /// Curve data of a figure.
    Figure {
        #[arg(long)]
        id: u32,
        /// Add simulated columns (figures 5 and 7).
        #[arg(long)]
        empirical: bool,
    },
    /// Monte Carlo estimator variance against the MCRB.
    SimulateMcrb {
        /// Exit with status 3 if a variance ratio leaves [0.9, 1.15].
        #[arg(long)]
        check: bool,
    },
    /// Monte Carlo static/moving classification error.
    SimulateDetect {
        /// Exit with status 3 if a prediction leaves the 99% interval.
        #[arg(long)]
        check: bool,
    },
    /// Noise density and noise figure from a reader sensitivity.
    NoiseFigure {
        /// Sensitivity in dBm (default: the mode's published value).
        #[arg(long, allow_hyphen_values = true)]
        p_s_dbm: Option<f64>,
        #[arg(long)]
        ber: Option<f64>,
        #[arg(long)]
        blf: Option<f64>,
        /// Miller spread factor (1 for FM0).
        #[arg(long)]
        m: Option<u32>,
    },
}

enum Failure {
    Config(Error),
    Check(String),
    Other(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::NotFound(_) => Failure::Config(e),
            other => Failure::Other(other),
        }
    }
}

fn load_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let read = |p: &PathBuf| {
        fs::read_to_string(p).map_err(|e| {
            Failure::Config(Error::Config {
                field: p.display().to_string(),
                message: e.to_string(),
            })
        })
    };
    let mut b = ConfigBuilder::new();
    if let Some(p) = &c.modes_file {
        b.extend_catalog(&read(p)?)?;
    }
    if let Some(p) = &c.config {
        b.load_text(&read(p)?)?;
    }
    for o in &c.overrides {
        b.set_pair(o)?;
    }
    if let Some(s) = c.seed {
        b.set("seed", &s.to_string())?;
    }
    if let Some(t) = c.trials {
        b.set("trials", &t.to_string())?;
    }
    if c.sequential {
        b.execution(Execution::Sequential);
    }
    Ok(b.build()?)
}

fn emit(table: &CsvTable, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => table.write_to(io::BufWriter::new(
            fs::File::create(p).map_err(Error::from)?,
        ))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_to(&mut lock)?;
            lock.flush().map_err(Error::from)?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = load_config(&cli.common)?;
    let out = &cli.common.out;
    match cli.command {
        Command::Bounds => emit(&bounds_table(&cfg)?, out),
        Command::Vmin => emit(&vmin_table(&cfg)?, out),
        Command::Figure { id, empirical } => {
            emit(&figure_dataset(id, &cfg, FigureOptions { empirical })?, out)
        }
        Command::SimulateMcrb { check } => {
            let rows = run_mcrb_experiment(&cfg)?;
            emit(&mcrb_table(&cfg, &rows), out)?;
            let bad = check_tightness(&rows, TIGHTNESS.0, TIGHTNESS.1);
            if check && !bad.is_empty() {
                let xs: Vec<String> = bad.iter().map(|r| r.x.to_string()).collect();
                return Err(Failure::Check(format!(
                    "variance ratio outside [{}, {}] at {}",
                    TIGHTNESS.0,
                    TIGHTNESS.1,
                    xs.join(", ")
                )));
            }
            Ok(())
        }
        Command::SimulateDetect { check } => {
            let rows = run_detection_experiment(&cfg)?;
            emit(&detection_table(&cfg, &rows), out)?;
            let bad: Vec<String> = rows
                .iter()
                .filter(|r| !r.prediction_in_ci())
                .map(|r| r.v.to_string())
                .collect();
            if check && !bad.is_empty() {
                return Err(Failure::Check(format!(
                    "predicted error outside the 99% interval at v = {}",
                    bad.join(", ")
                )));
            }
            Ok(())
        }
        Command::NoiseFigure {
            p_s_dbm,
            ber,
            blf,
            m,
        } => {
            let p_s = match p_s_dbm.or(cfg.mode.sensitivity_dbm) {
                Some(p) => p,
                None => {
                    return Err(Failure::Config(Error::Config {
                        field: "p_s_dbm".into(),
                        message: format!("{} has no published sensitivity", cfg.mode.label),
                    }))
                }
            };
            let (_, table) = noise_figure_report(
                p_s,
                ber.unwrap_or(cfg.ber),
                blf.unwrap_or(f64::from(cfg.mode.blf_hz)),
                m.unwrap_or(cfg.mode.encoding.spread_factor()),
            )?;
            emit(&table, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
