//! Command-line front end: `cavity-kinetics <coefficients|equilibrium|simulate|modes> --config <path>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime guard.

mod commands;
mod config;
mod error;
mod output;
mod setup;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
pub use crate::error::CliError;
use crate::output::OutputDir;

#[derive(Parser)]
#[command(
    name = "cavity-kinetics",
    version,
    about = "Generalized Einstein kinetics for aφ ⇌ a + φ"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured SSA seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(
        long,
        env = "CAVITY_KINETICS_OUT_DIR",
        default_value = "cavity-kinetics-out"
    )]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// A, B_abs, B_em, C and the broad-band cross-checks.
    Coefficients(Common),
    /// Steady-state balance over a temperature sweep.
    Equilibrium(Common),
    /// ODE and/or SSA evolution of the configured network.
    Simulate(Common),
    /// Resonance counts per band and the matter/boson mode ratio.
    Modes(Common),
}

fn prepare(common: &Common) -> Result<(RunConfig, OutputDir), CliError> {
    Ok((
        RunConfig::load(&common.config)?,
        OutputDir::create(&common.out)?,
    ))
}

/// Runs one parsed invocation; the summary is also written under `--out`.
pub fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    match &cli.command {
        Command::Coefficients(c) => {
            let (config, out) = prepare(c)?;
            commands::coefficients(&config, &out)
        }
        Command::Equilibrium(c) => {
            let (config, out) = prepare(c)?;
            commands::equilibrium(&config, &out)
        }
        Command::Simulate(c) => {
            let (config, out) = prepare(c)?;
            commands::simulate(&config, &out, c.seed)
        }
        Command::Modes(c) => {
            let (config, out) = prepare(c)?;
            commands::modes(&config, &out)
        }
    }
}

/// Parses `args` (program name first) and runs them.
pub fn run_args<I, T>(args: I) -> Result<serde_json::Value, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::config("", e.to_string()))?;
    run(cli)
}
