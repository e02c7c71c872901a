//! `smileybench` — drive the emoji-supervised sentiment pipeline.
//!
//! Every subcommand reads one config file and writes fixed-name artifacts
//! into the output directory, so stages chain by default and a whole run
//! is reproducible from (config, seed) alone. Reruns are byte-identical.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use smileybench_core::Error;

use crate::config::{Config, Ctx};

#[derive(Parser)]
#[command(name = "smileybench", version, about = "Emoji-supervised visual sentiment pipeline")]
struct Cli {
    /// Run configuration file (`section.key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override the `seed` key from the config.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the `paths.out_dir` key from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a raw tweet corpus into accepted samples plus a reject audit.
    Ingest,
    /// Reservoir-balance the accepted samples over time windows.
    Sample,
    /// Report per-category counts and label co-occurrence.
    Stats,
    /// Carve the dataset into train/val/test files.
    Split,
    /// Train the emoji embedding network.
    Train,
    /// Score a trained checkpoint on the test split.
    Eval,
    /// Cross-validated transfer of the embedding to a labeled target task.
    Transfer,
    /// Zero-shot sentiment from emoji probabilities alone.
    Zsl,
    /// Embedding fingerprints and a 2-d projection of the dataset.
    Analyze,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> smileybench_core::Result<()> {
    let config_path = cli
        .config
        .ok_or_else(|| Error::Parse("missing required --config <PATH>".into()))?;
    let cfg = Config::load(&config_path)?;
    let ctx = Ctx::new(cfg, cli.seed, cli.out)?;
    std::fs::create_dir_all(&ctx.out_dir)?;
    match cli.command {
        Command::Ingest => commands::ingest::run(&ctx),
        Command::Sample => commands::sample::run(&ctx),
        Command::Stats => commands::stats::run(&ctx),
        Command::Split => commands::split::run(&ctx),
        Command::Train => commands::train::run(&ctx),
        Command::Eval => commands::eval::run(&ctx),
        Command::Transfer => commands::transfer::run(&ctx),
        Command::Zsl => commands::zsl::run(&ctx),
        Command::Analyze => commands::analyze::run(&ctx),
    }
}

/// 0 success, 2 I/O, 3 bad config/input syntax, 4 checkpoint/taxonomy
/// incompatibility, 5 numeric failure, 1 anything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 2,
        Error::Parse(_)
        | Error::Encoding(_)
        | Error::MalformedRecord { .. }
        | Error::InvalidRange(_) => 3,
        Error::Compatibility(_) => 4,
        Error::Numeric(_) => 5,
        _ => 1,
    }
}
