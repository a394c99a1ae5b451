//! Command-line front end for the optomechanical amplifier toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pondero::commands::{self, OutputOptions};
use pondero::config::Config;
use pondero::report::OutputFormat;
use pondero::AppError;

#[derive(Parser)]
#[command(
    name = "pondero",
    version,
    about = "Simulate and analyze a cavity optomechanical amplifier",
    propagate_version = true
)]
struct Cli {
    /// TOML configuration describing the system and command settings.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output file; results go to stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Output format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,

    /// Thread count for parallel commands (default: run inline).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-loop mechanical gain over the configured frequency grid.
    Gain,
    /// Amplitude and phase modulation transfer with lock-in phase profile.
    Network,
    /// Detected quadrature noise relative to shot over angle and frequency.
    Squeeze,
    /// Synthesize a raw heterodyne record and write it as a trace pair.
    Synth {
        /// Override the seed given in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Demodulate a stored trace and report quadrature spectra.
    Demod {
        /// Trace stem (or its .f32 / .toml path).
        trace: PathBuf,
    },
    /// Fit a stored spectrum or network response.
    Fit {
        /// CSV input with a header row; first column is frequency in Hz.
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), AppError> {
    let config_path = cli
        .config
        .ok_or_else(|| AppError::Config("--config <PATH> is required".into()))?;
    let cfg = Config::load(&config_path)?;
    let out = OutputOptions {
        path: cli.out.clone(),
        format: OutputFormat::parse(&cli.format)?,
    };
    match cli.command {
        Command::Gain => commands::run_gain(&cfg, &out),
        Command::Network => commands::run_network(&cfg, &out),
        Command::Squeeze => commands::run_squeeze(&cfg, &out, cli.workers),
        Command::Synth { seed } => {
            let stem = cli.out.ok_or_else(|| {
                AppError::Config("synth requires --out <trace-stem> to name the trace pair".into())
            })?;
            commands::run_synth(&cfg, &stem, seed)
        }
        Command::Demod { trace } => commands::run_demod(&cfg, &trace, &out),
        Command::Fit { input } => commands::run_fit(&cfg, &input, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
