//! `phs`: certification and simulation of piecewise port-Hamiltonian systems.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{cmd_check, cmd_simulate, cmd_spectrum, cmd_transform_verify, Context, Failure};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "phs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the boundary and interface conditions.
    Check(CommonArgs),
    /// Integrate in time and write trajectory.csv, energy.csv and summary.json.
    Simulate(CommonArgs),
    /// Eigenvalues of the discrete generator.
    Spectrum(CommonArgs),
    /// Check that the single-interface map to the boundary form preserves the energy.
    TransformVerify(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn context(args: &CommonArgs) -> Result<Context, Failure> {
    let config = RunConfig::load(&args.config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("phs-out"));
    let seed = args.seed.unwrap_or(config.seed);
    Ok(Context { config, out, seed })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, cmd): (&CommonArgs, fn(&Context) -> Result<(), Failure>) = match &cli.command {
        Command::Check(a) => (a, cmd_check),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Spectrum(a) => (a, cmd_spectrum),
        Command::TransformVerify(a) => (a, cmd_transform_verify),
    };
    match context(args).and_then(|ctx| cmd(&ctx)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
