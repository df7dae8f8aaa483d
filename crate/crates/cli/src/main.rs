use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod svg;

use commands::{BoundsArgs, OracleArgs, RunArgs, SynthArgs, ValidateArgs};

/// Distributed Lagrangian method experiments.
#[derive(Debug, Parser)]
#[command(name = "dlm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the method and write traces, the reference solution, bound checks and plots.
    Run(RunArgs),
    /// Solve the dispatch problem centrally.
    Oracle(OracleArgs),
    /// Check a recorded trace against the consensus and dual-gap bounds.
    Bounds(BoundsArgs),
    /// Inspect or generate case files.
    #[command(subcommand)]
    Case(CaseCommand),
}

#[derive(Debug, Subcommand)]
enum CaseCommand {
    Validate(ValidateArgs),
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => commands::run(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Case(CaseCommand::Validate(a)) => commands::case_validate(a),
        Command::Case(CaseCommand::Synth(a)) => commands::case_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '\r'], " ");
            eprintln!("error kind={} msg={msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
