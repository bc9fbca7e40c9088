//! `interdesign`: solve design relaxations, round them through the
//! interlacing family, and check the results against brute force.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input, 3 infeasible
//! relaxation, 4 rounding guarantee not met, 5 rank-deficient fractional
//! solution, 6 failed verification.

mod commands;
mod error;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{BenchArgs, Outcome, RoundArgs, SolveArgs, VerifyArgs};

#[derive(Parser, Debug)]
#[command(
    name = "interdesign",
    version,
    about = "Experimental design by interlacing-family rounding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the convex relaxation and report the fractional solution.
    Solve(SolveArgs),
    /// Round a fractional solution (given or freshly solved) to k vectors.
    Round(RoundArgs),
    /// Enumerate every leaf of the family and check its invariants.
    Verify(VerifyArgs),
    /// Run a seeded instance battery and compare observed ratios with bounds.
    Bench(BenchArgs),
}

fn run(cli: &Cli) -> Result<Outcome, error::CliError> {
    match &cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Round(a) => commands::round(a),
        Command::Verify(a) => commands::verify(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|outcome| {
        io::write_output(cli.out.as_deref(), &outcome.json)?;
        eprintln!("{}", outcome.summary);
        Ok(outcome.code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
