//! Command line for structured multi-measurement sparse approximation:
//! solve, analyze, bench, postprocess and dict subcommands over JSON
//! configurations.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Context;

#[derive(Parser)]
#[command(
    name = "gmomp",
    version,
    about = "Structured sparse approximation for multiple measurement vectors"
)]
struct Cli {
    /// JSON configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory override
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured approximation problem and write X.csv,
    /// patterns.txt and run.json
    Solve,
    /// Evaluate Babel-function recovery conditions for the configured
    /// dictionary
    Analyze {
        /// Support size L to evaluate
        #[arg(long)]
        sparsity: usize,
        /// Weakness parameter entering the exact-recovery condition
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Run the configured benchmark and write results.csv plus summary.json
    Bench,
    /// Denoise the patterns of a previous solve
    Postprocess {
        /// Directory holding X.csv, patterns.txt and run.json
        #[arg(long)]
        solution: PathBuf,
        /// Polynomial degree for the pattern fit
        #[arg(long)]
        pattern_degree: Option<usize>,
        /// Support weight of the pattern fit
        #[arg(long)]
        delta: Option<f64>,
        /// Polynomial degree for amplitude smoothing
        #[arg(long)]
        amplitude_degree: Option<usize>,
    },
    /// Export the configured dictionary as CSV plus a JSON sidecar
    Dict,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // Ignore failure: the pool may already exist.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let ctx = Context {
        config: cli.config,
        seed: cli.seed,
        output: cli.output,
    };
    let result = match cli.command {
        Command::Solve => commands::solve(&ctx),
        Command::Analyze { sparsity, lambda } => commands::analyze(&ctx, sparsity, lambda),
        Command::Bench => commands::bench(&ctx),
        Command::Postprocess {
            solution,
            pattern_degree,
            delta,
            amplitude_degree,
        } => commands::postprocess(&ctx, &solution, pattern_degree, delta, amplitude_degree),
        Command::Dict => commands::dict(&ctx),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io_or_format() { 1 } else { 2 })
        }
    }
}
