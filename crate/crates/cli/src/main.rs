//! `sotlab`: reproducible experiments for sparsity-aware optimal transport.

mod commands;
mod config;
mod error;
mod workspace;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "sotlab", version, about = "Sparsity-aware optimal transport experiments")]
struct Cli {
    /// Directory that relative input paths are resolved against (default: current directory).
    #[arg(long, global = true)]
    workspace: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the two-point toy problem under several ground costs.
    Example1(commands::example1::Args),
    /// Histogram and generalized-Gaussian fit of residual spectra.
    Analyze(commands::analyze::Args),
    /// Generate a clean/degraded dataset.
    Synth(commands::synth::Args),
    /// Train a restoration model on unpaired pools.
    Train(commands::train::Args),
    /// PSNR/SSIM of restored images against references.
    Eval(commands::eval::Args),
    /// Apply a trained model to every image of a directory.
    Restore(commands::restore::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = Workspace::new(cli.workspace).and_then(|ws| match cli.command {
        Command::Example1(args) => commands::example1::run(&ws, args),
        Command::Analyze(args) => commands::analyze::run(&ws, args),
        Command::Synth(args) => commands::synth::run(&ws, args),
        Command::Train(args) => commands::train::run(&ws, args),
        Command::Eval(args) => commands::eval::run(&ws, args),
        Command::Restore(args) => commands::restore::run(&ws, args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
