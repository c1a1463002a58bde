use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod failure;
mod output;

use commands::Invocation;
use config::RunConfig;
use failure::{Failure, EXIT_USAGE};

/// Momentum reconstruction from a pair of Unruh-deWitt detectors.
#[derive(Parser, Debug)]
#[command(name = "udw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; omitted keys take the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed, overriding `output.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and the oracle.
    #[arg(long, global = true, env = "UDW_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Check every kinematic constraint.
    Validate,
    /// Tabulate the azimuthal density at each configured tilt.
    Distribution,
    /// Entropy and best-guess probability over the separation sweep.
    Stats,
    /// Compare the closed form against the brute-force oracle.
    Oracle,
    /// Solve the classical planar break-up.
    Classical2d,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output.directory.clone());
    let inv = Invocation {
        config: &config,
        out_dir: &out_dir,
        seed: cli.seed.unwrap_or(config.output.seed),
        json: cli.json,
    };
    match cli.command {
        Command::Validate => commands::validate(&inv),
        Command::Distribution => commands::distribution(&inv),
        Command::Stats => commands::stats(&inv),
        Command::Oracle => commands::oracle(&inv),
        Command::Classical2d => commands::classical2d(&inv),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
