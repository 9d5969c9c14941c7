//! `est`: expected sliced transport distances, plans, interpolations and
//! experiment data from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "est", version, about = "Expected sliced transport between discrete measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the EST distance between two measures.
    Distance {
        source: PathBuf,
        target: PathBuf,
        /// Append one row per slice: index, cost, weight.
        #[arg(long)]
        per_slice: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Compute a transport plan and write it to a file.
    Plan {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the exact Wasserstein distance.
    Exact {
        source: PathBuf,
        target: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write `steps + 1` equally spaced frames of the displacement interpolation.
    Interpolate {
        source: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write the linear-OT embedding of a measure relative to a reference.
    Embed {
        reference: PathBuf,
        measure: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run an experiment: weak-convergence, temperature-sweep or embed-bench.
    Experiment {
        name: String,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone, Debug)]
struct RunArgs {
    /// Cost exponent.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Number of slices [default: 128; 512 for weak-convergence].
    #[arg(long)]
    slices: Option<usize>,
    /// Slice temperature.
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for merging equal projections.
    #[arg(long, default_value_t = 1e-9)]
    grouping_tol: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args, Clone, Debug)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = Method::Est)]
    method: Method,
    /// Entropic regularization for `--method sinkhorn`, in cost units.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Est,
    MinSwgg,
    Exact,
    Sinkhorn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

fn configure_threads() -> Result<(), commands::Failure> {
    let Ok(value) = std::env::var("EST_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| commands::Failure::usage(format!("EST_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| commands::run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
