//! `csigan`: synthesize CSI datasets, split them, train the conditional
//! WGAN-GP, sample from it, run the interpolation baseline, and evaluate.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data or file
//! format error, 4 numerical abort during training, 5 split produced an
//! empty training set.

mod cmd;
mod config;
mod exit;
mod positions;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::exit::ExitKind;

#[derive(Debug, Parser)]
#[command(name = "csigan", version, about = "Position-conditioned massive-MIMO channel modelling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a dataset from a multipath scenario.
    Synth(cmd::synth::Args),
    /// Strided train/test split with a hole cut out of the training set.
    Split(cmd::split::Args),
    /// Train the generator and critic.
    Train(cmd::train::Args),
    /// Sample CSI from a trained generator.
    Generate(cmd::generate::Args),
    /// Evaluate the Delaunay interpolation baseline.
    Interpolate(cmd::interpolate::Args),
    /// Per-datapoint statistics, delay-spread histograms and distances.
    Evaluate(cmd::evaluate::Args),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitKind::Usage.code() } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Split(a) => cmd::split::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Generate(a) => cmd::generate::run(a),
        Command::Interpolate(a) => cmd::interpolate::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let label = if f.kind == ExitKind::EmptyTrain { "warning" } else { "error" };
            eprintln!("{label}: {:#}", f.error);
            f.kind.code()
        }
    }
}
