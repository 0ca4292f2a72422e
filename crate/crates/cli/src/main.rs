//! `oqt`: run operational tomography experiments from a JSON config.
//!
//! ```text
//! oqt infer --config configs/ramsey.json --out ramsey-out
//! OQT_THREADS=4 oqt rb --config rb.json --seed 7
//! ```

use clap::{Args, Parser, Subcommand};
use oqt::io::{parse_config, Mode, RunConfig};
use oqt::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Thread count for the particle filter; unset means one per core.
const THREADS_ENV: &str = "OQT_THREADS";

#[derive(Parser, Debug)]
#[command(name = "oqt", version, about = "Gauge-free quantum tomography with particle filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample counts from a known gate set
    Simulate(RunArgs),
    /// Infer an operational representation from counts
    Infer(RunArgs),
    /// Randomized benchmarking with credible intervals
    Rb(RunArgs),
    /// Evolve the operational state under a fiducial Lindbladian
    Dynamics(RunArgs),
    /// Rebit state tomography against naive readout
    Statetomo(RunArgs),
    /// Score a saved posterior against a dataset
    Report(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the particle count
    #[arg(long)]
    particles: Option<usize>,
}

impl Command {
    fn split(self) -> (Mode, RunArgs) {
        match self {
            Command::Simulate(a) => (Mode::Simulate, a),
            Command::Infer(a) => (Mode::Infer, a),
            Command::Rb(a) => (Mode::Rb, a),
            Command::Dynamics(a) => (Mode::Dynamics, a),
            Command::Statetomo(a) => (Mode::Statetomo, a),
            Command::Report(a) => (Mode::Report, a),
        }
    }
}

fn load(mode: Mode, args: &RunArgs) -> oqt::Result<RunConfig> {
    let mut config = parse_config(&args.config)?;
    if config.mode != mode {
        log::info!("config mode `{}` replaced by subcommand `{}`", config.mode.name(), mode.name());
        config.mode = mode;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    }
    if let Some(n) = args.particles {
        config.particles = n;
    }
    config.validate()?;
    Ok(config)
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| format!("{THREADS_ENV}={value} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (mode, args) = cli.command.split();
    let config = match load(mode, &args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match oqt::run::run(&config) {
        Ok(report) => {
            for name in &report.artifacts {
                println!("{}", config.output_dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::InferenceFailure { .. }) => {
            eprintln!("error: {e}");
            eprintln!("hint: the data are impossible under every particle; widen the prior or add particles");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
