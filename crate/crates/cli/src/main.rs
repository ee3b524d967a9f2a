use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hazard_twist::config::{parse_method_list, ExperimentConfig, ExperimentKind};
use hazard_twist::error::Error;
use hazard_twist::experiments::{
    run_diagnostics, run_efficiency_sweep, run_single_estimate, run_theta_sweep,
    run_threshold_sweep, write_diagnostics_csv, write_efficiency_csv, write_sweep_csv,
};
use hazard_twist::{parse_config, with_workers};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_OUTPUT: u8 = 1;

#[derive(Parser)]
#[command(
    name = "hazard-twist",
    version,
    about = "Hazard-twisting importance sampling experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One estimate per method at the configured threshold.
    Estimate(Common),
    /// Second moment against the twisting parameter.
    ThetaSweep(Common),
    /// Second moment against the threshold at minmax parameters.
    ThresholdSweep(Common),
    /// Efficiencies relative to naive Monte Carlo.
    Efficiency(Common),
    /// Tail-dominance verdicts and optimality ratios.
    Diagnose(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<u64>,
    /// Comma-separated methods (naive, conventional, improved).
    #[arg(long)]
    method: Option<String>,
    /// Worker threads; the output does not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

enum Failure {
    Input(String),
    Numeric(String),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Input(e.to_string())
        } else if matches!(e, Error::Io(_)) {
            Failure::Output(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", common.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(runs) = common.runs {
        if runs == 0 {
            return Err(Failure::Input("--runs must be positive".into()));
        }
        config.runs = runs;
    }
    if let Some(list) = &common.method {
        config.methods = Some(parse_method_list(list)?);
    }
    Ok(config)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::Output(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<(), Failure> {
    let (kind, common) = match &command {
        Command::Estimate(c) => (Some(ExperimentKind::SingleEstimate), c),
        Command::ThetaSweep(c) => (Some(ExperimentKind::ThetaSweep), c),
        Command::ThresholdSweep(c) => (Some(ExperimentKind::ThresholdSweep), c),
        Command::Efficiency(c) => (Some(ExperimentKind::EfficiencySweep), c),
        Command::Diagnose(c) => (None, c),
    };
    let config = load(common)?;
    let config = match kind {
        Some(k) => config.for_experiment(k)?,
        None => config,
    };
    log::info!(
        "{} components, {} runs, seed {}",
        config.scenario.len(),
        config.runs,
        config.seed
    );

    let workers = common.workers;
    match kind {
        Some(ExperimentKind::EfficiencySweep) => {
            let rows = with_workers(workers, || run_efficiency_sweep(&config))??;
            write_efficiency_csv(&rows, open_out(common.out.as_deref())?)?;
        }
        Some(k) => {
            let rows = with_workers(workers, || match k {
                ExperimentKind::ThetaSweep => run_theta_sweep(&config),
                ExperimentKind::ThresholdSweep => run_threshold_sweep(&config),
                _ => run_single_estimate(&config),
            })??;
            write_sweep_csv(&rows, open_out(common.out.as_deref())?)?;
        }
        None => {
            let report = with_workers(workers, || run_diagnostics(&config))??;
            // Keep stdout pure CSV when no file is given.
            match &common.out {
                Some(_) => print!("{}", report.summary()),
                None => eprint!("{}", report.summary()),
            }
            write_diagnostics_csv(&report, open_out(common.out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(Failure::Output(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_OUTPUT)
        }
    }
}
