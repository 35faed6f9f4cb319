//! `decaybound`: simulate, estimate, bound, diagnose, and report on
//! spatial decay around point sources.
//!
//! Exit codes: 0 on success (including a run whose verdict is that the
//! framework does not apply), 2 for usage problems (bad flags, bad config,
//! malformed or missing inputs), 1 for internal failures.

use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod artifacts;
mod commands;
mod config;

use config::{CommonArgs, RunConfig};

#[derive(Parser)]
#[command(
    name = "decaybound",
    version,
    about = "Spatial decay estimation and detection boundaries around point sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset from a scenario JSON.
    Simulate(CommonArgs),
    /// Fit decay regressions to a dataset and rank them.
    Estimate(CommonArgs),
    /// Turn a decay estimate into a detection boundary.
    Bound(CommonArgs),
    /// Run the validity screen, placebo study, and robustness checks.
    Diagnose(CommonArgs),
    /// Consolidate a run directory into a report and plot data.
    Report(CommonArgs),
}

fn run(cli: Cli) -> decaybound::Result<()> {
    let (args, command): (&CommonArgs, fn(&RunConfig) -> decaybound::Result<()>) =
        match &cli.command {
            Command::Simulate(a) => (a, commands::simulate::run),
            Command::Estimate(a) => (a, commands::estimate::run),
            Command::Bound(a) => (a, commands::bound::run),
            Command::Diagnose(a) => (a, commands::diagnose::run),
            Command::Report(a) => (a, commands::report::run),
        };
    let cfg = RunConfig::resolve(args)?;
    command(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
