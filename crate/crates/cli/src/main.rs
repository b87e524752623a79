//! `unravel`: CSV data for the unraveling-robustness analysis of the
//! parametric oscillator.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use config::Flags;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "unravel", version, about = "Robust unravelings of the parametric oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Realizable and unconstrained member-covariance regions: `curve,beta,gamma`.
    Region,
    /// Robust survival time and related closed forms over a chi grid.
    Fig2,
    /// Survival probability of the stationary ensemble of u on a time grid.
    Survival,
    /// Survival time of u next to the robust value.
    Tau,
    /// Grid search plus refinement for the unraveling with the longest survival time.
    Optimize,
    /// Gaussian formulas against a truncated Fock-basis calculation.
    OracleCompare,
    /// Quantum trajectories: per-trajectory moments after relaxation.
    Simulate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = cli.flags.resolve()?;
    match cli.command {
        Command::Region => commands::region(&flags),
        Command::Fig2 => commands::fig2(&flags),
        Command::Survival => commands::survival(&flags),
        Command::Tau => commands::tau(&flags),
        Command::Optimize => commands::optimize(&flags),
        Command::OracleCompare => commands::oracle_compare(&flags),
        Command::Simulate => commands::simulate(&flags),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).parse_default_env().init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("unravel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
