//! Command-line front end: reads a TOML experiment file, runs one study and
//! writes CSV tables.
//!
//! Exit status is 0 on success, 2 when the input is rejected and 3 when the
//! computation fails.

mod commands;
mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Context;
use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "holeburn", version, about = "Spectral hole burning and spectral diffusion studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Burn/wait sequence: population snapshots and a hole summary.
    Holeburn(Common),
    /// Pulse waveforms, spectra and out-of-band suppression.
    Pulse(Common),
    /// Quadratic Zeeman sweep and hole/anti-hole pattern.
    Zeeman(Common),
    /// Width-series and field-noise fits.
    Diffusion(Common),
    /// Dipolar field estimates per spin species.
    Dipolar(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (Common, fn(&Context) -> anyhow::Result<()>) = match cli.command {
        Command::Holeburn(c) => (c, commands::holeburn::run),
        Command::Pulse(c) => (c, commands::pulse::run),
        Command::Zeeman(c) => (c, commands::zeeman::run),
        Command::Diffusion(c) => (c, commands::diffusion::run),
        Command::Dipolar(c) => (c, commands::dipolar::run),
    };
    let result = ExperimentConfig::load(&common.config).and_then(|config| {
        run(&Context {
            config,
            out: common.out,
            seed: common.seed,
            strict: common.strict,
        })
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            failure::exit_code(&e)
        }
    }
}
