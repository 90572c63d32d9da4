//! `fei`: reproducible batch runs of the defect, scaling, search and recursion
//! analyses in `fei-core`.
//!
//! Exit status: 0 on success, 2 on usage or domain errors, 3 on numeric failure.

mod commands;
mod error;
mod funcspec;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::CliError;
use output::{emit, GlobalOpts, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "fei",
    version,
    about = "Defect sweeps, stability probes and recursion checks"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy of degree alpha of a distribution, optionally with J.
    Entropy(commands::EntropyArgs),
    /// Sup and mean defect of a function over the triangle lattice.
    Defect(commands::DefectArgs),
    /// Sup defect of a perturbed solution over shrinking margins, with log-log slope.
    Probe(commands::ProbeArgs),
    /// Search for eps-feasible functions far from the solution family.
    Search(commands::SearchArgs),
    /// Compare a recursively built measure sequence with J, level by level.
    Recursion(commands::RecursionArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (name, outcome): (&str, Outcome) = match &cli.command {
        Command::Entropy(a) => ("entropy", commands::entropy(a)?),
        Command::Defect(a) => ("defect", commands::defect(a, cli.global.csv.is_some())?),
        Command::Probe(a) => ("probe", commands::probe(a)?),
        Command::Search(a) => ("search", commands::search(a, cli.global.seed)?),
        Command::Recursion(a) => ("recursion", commands::recursion(a)?),
    };
    emit(name, &cli.global, outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fei: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
