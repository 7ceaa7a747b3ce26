//! Command-line front end: simulate Hawkes corpora, align two corpora,
//! run the synthetic benchmark, and score stored plans.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical failure,
//! 4 I/O error.

mod commands;
mod config;
mod error;
mod io;

use clap::{Parser, Subcommand};
use commands::{align, bench, eval, simulate};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hawkes-align",
    version,
    about = "Jointly learn two Hawkes processes and align their event types via fused Gromov-Wasserstein optimal transport"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample event sequences from a Hawkes parameter file.
    Simulate(simulate::SimulateArgs),
    /// Jointly fit two corpora and emit the learned correspondence.
    Align(align::AlignArgs),
    /// Run the synthetic benchmark with matched-seed trials.
    Bench(bench::BenchArgs),
    /// Score a stored transport plan against a ground-truth correspondence.
    Eval(eval::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Align(args) => align::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Eval(args) => eval::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
