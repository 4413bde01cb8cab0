//! Command-line driver for `fockphase` experiments.
//!
//! Every subcommand reads a TOML configuration (except `wallis`, which is
//! self-contained), writes its outputs into a directory, and prints nothing on
//! success — progress goes to stderr via the logger, gated by the
//! `FOCKPHASE_LOG` environment variable. Exit codes: 0 success, 2 for
//! configuration or input validation problems, 3 for everything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod cmd;
mod io;

#[derive(Parser)]
#[command(name = "fockphase", version, about = "Phase-emergence simulations for split condensates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a detection record and write it with its posterior trail.
    Simulate {
        /// Experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Override the configured RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: from config, else "<name>-out").
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Skip per-step posterior snapshots; write only the final density.
        #[arg(long)]
        final_only: bool,
    },
    /// Replay a stored record through the posterior update.
    Posterior {
        /// Experiment configuration (TOML); must match the record's schema.
        #[arg(long)]
        config: PathBuf,
        /// Detection record (CSV) to replay.
        #[arg(long)]
        record: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Skip per-step posterior snapshots; write only the final density.
        #[arg(long)]
        final_only: bool,
    },
    /// Compare the engine against the exact finite-N weights over a population sweep.
    OracleCompare {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured RNG seed for the probe record.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Tabulate spin-count probabilities: closed form vs. phase-average quadrature.
    Wallis {
        /// Largest total count P to tabulate.
        #[arg(long, default_value_t = 20)]
        max_p: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run seed ensembles over a grid of record lengths and prior widths.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured base seed (seeds run base..base+seeds).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> fockphase::Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out_dir,
            final_only,
        } => cmd::simulate(&config, seed, out_dir, final_only),
        Command::Posterior {
            config,
            record,
            out_dir,
            final_only,
        } => cmd::posterior(&config, &record, out_dir, final_only),
        Command::OracleCompare {
            config,
            seed,
            out_dir,
        } => cmd::oracle_compare(&config, seed, out_dir),
        Command::Wallis { max_p, out_dir } => cmd::wallis(max_p, out_dir),
        Command::Sweep {
            config,
            seed,
            jobs,
            out_dir,
        } => cmd::sweep(&config, seed, jobs, out_dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FOCKPHASE_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if err.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
