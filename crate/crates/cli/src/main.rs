//! Command-line surface: generate data, run preprocessing recipes, sweep the
//! detectors, benchmark updates, and score files in batch.
//!
//! Exit codes: 0 success, 2 usage or validation failure, 3 output I/O
//! failure, 4 internal engine failure.

mod commands;

use clap::{Parser, Subcommand};

use commands::{BenchArgs, PrepCreditArgs, PrepShuttleArgs, RunArgs, ScoreArgs, SimulateArgs};

#[derive(Parser)]
#[command(
    name = "lofstream",
    about = "Streaming LOF outlier detection: ILOF and EILOF engines with an experiment harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic initial/stream dataset pair.
    Simulate(SimulateArgs),
    /// Run a documented preprocessing recipe on a raw CSV file.
    #[command(subcommand)]
    Prep(PrepCommand),
    /// Sweep one or both engines over a stream with checkpointed evaluation.
    Run(RunArgs),
    /// Compare per-insertion update work and wall time of both engines.
    Bench(BenchArgs),
    /// Batch-score a CSV file with static LOF and flag outliers.
    Score(ScoreArgs),
}

#[derive(Subcommand)]
enum PrepCommand {
    /// Shuttle recipe: drop class 4, binarize classes, window, split,
    /// standardize each subset.
    Shuttle(PrepShuttleArgs),
    /// Credit-card recipe: keep frauds, subsample legitimate rows to the
    /// target fraction, restore temporal order, window, split, standardize.
    Credit(PrepCreditArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => commands::simulate(args),
        Command::Prep(PrepCommand::Shuttle(args)) => commands::prep_shuttle(args),
        Command::Prep(PrepCommand::Credit(args)) => commands::prep_credit(args),
        Command::Run(args) => commands::run(args),
        Command::Bench(args) => commands::bench(args),
        Command::Score(args) => commands::score(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}
