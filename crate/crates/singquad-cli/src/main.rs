//! `singquad`: quadrature for integrands with a point singularity on
//! uniform grids. Subcommands: `weights` (precompute correction weights),
//! `converge` (order studies with CSV/Markdown reports), `integrate`
//! (single value to stdout).

mod catalog;
mod config;
mod jobs;
mod report;
mod support;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "singquad",
    version,
    about = "Corrected trapezoidal rules for singular integrands"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for independent sweep points (results are identical
    /// for any count; 1 runs fully serial).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for relative output paths.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize correction weights (single offset or a table over offsets).
    Weights {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an h-sweep against the reference integrator and report orders.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate one rule at one spacing and print the value.
    Integrate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests are success; everything else is usage.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = match &cli.command {
        Command::Weights { config } => jobs::cmd_weights(config, &cli.out),
        Command::Converge { config } => jobs::cmd_converge(config, &cli.out, workers),
        Command::Integrate { config } => jobs::cmd_integrate(config, &cli.out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
