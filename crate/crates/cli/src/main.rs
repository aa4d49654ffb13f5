//! Command-line driver: one experiment per invocation, configured by a
//! TOML document and writing its artifacts into an output directory.
//!
//! Exit codes: 0 success, 1 a scientific check failed, 2 configuration or
//! usage error.

mod check;
mod moment_pde;
mod moments;
mod report;
mod simulate;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use paraxial::{Error, ExperimentKind, RunConfig};

use report::Outcome;

#[derive(Parser, Debug)]
#[command(name = "paraxial", version, about = "Monte Carlo simulation and moment verification for random paraxial waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed, replacing the configured one.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for realizations and parameter sweeps.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Treat warnings as failures.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the covariance model and scaling against the model hypotheses.
    CheckCovariance(Common),
    /// Run a Monte Carlo ensemble and store probe statistics.
    Simulate(Common),
    /// Tabulate analytic first and second moments and their limits.
    Moments(Common),
    /// Run the speckle test battery on a simulation or a fixture.
    Verify(Common),
    /// Compare the moment equation with its gaussian approximation.
    MomentPde(Common),
    /// Re-run a simulation manifest and compare artifact checksums.
    Replay {
        /// `manifest.json` written by `simulate`.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn load(common: &Common, kind: ExperimentKind) -> Result<RunConfig, Error> {
    let cfg = RunConfig::load(&common.config)?;
    if cfg.kind() != kind {
        return Err(Error::Config(format!(
            "configuration is for experiment kind {:?}, not {kind:?}",
            cfg.kind()
        )));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::CheckCovariance(c) => check::run(&load(&c, ExperimentKind::CheckCovariance)?, &c),
        Command::Simulate(c) => simulate::run(&load(&c, ExperimentKind::Simulate)?, &c),
        Command::Moments(c) => moments::run(&load(&c, ExperimentKind::Moments)?, &c),
        Command::Verify(c) => verify::run(&load(&c, ExperimentKind::Verify)?, &c),
        Command::MomentPde(c) => moment_pde::run(&load(&c, ExperimentKind::MomentPde)?, &c),
        Command::Replay { manifest, out, workers } => simulate::replay(&manifest, &out, workers),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(reasons)) => {
            for r in reasons {
                eprintln!("check failed: {r}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::exit_code(&e))
        }
    }
}
