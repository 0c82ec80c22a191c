use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use reaction_ident::cli::{cmd_forward, cmd_generate_data, cmd_identify, OutputTarget, RunConfig};

#[derive(Debug, Parser)]
#[command(
    version,
    about = "Reaction coefficient identification from final-time data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write legacy VTK files
    #[arg(long)]
    vtk: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the direct problem with the configured coefficient
    Forward(Common),
    /// Produce final-time observations from the true coefficient
    GenerateData(Common),
    /// Recover the reaction coefficient from observations
    Identify {
        #[command(flatten)]
        common: Common,
        /// Observation file written by generate-data
        #[arg(long)]
        psi: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Forward(c) | Command::GenerateData(c) => c,
        Command::Identify { common, .. } => common,
    };
    let config = RunConfig::from_path(&common.config).context("config")?;
    let target = OutputTarget::resolve(&config, common.out.clone(), common.vtk)?;
    match &cli.command {
        Command::Forward(_) => cmd_forward(&config, &target),
        Command::GenerateData(_) => cmd_generate_data(&config, &target),
        Command::Identify { psi, .. } => cmd_identify(&config, psi, &target),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
