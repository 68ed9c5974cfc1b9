use std::path::PathBuf;

use clap::ValueEnum;
use csigan_core::save_dataset;
use csigan_core::wgan::{load_checkpoint, sample_fixed, sample_variable};
use serde::Serialize;

use crate::config::{resolved_beside, write_resolved};
use crate::exit::{CmdResult, CoreContext};
use crate::positions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One noise vector shared by every position.
    Fixed,
    /// A fresh noise vector per position.
    Variable,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    checkpoint: PathBuf,
    /// `grid:...`, `dataset:<path>` or an `x,y` CSV.
    #[arg(long)]
    positions: String,
    #[arg(long, value_enum, default_value_t = Mode::Variable)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    checkpoint: &'a PathBuf,
    checkpoint_step: u64,
    positions: &'a str,
    num_positions: usize,
    mode: Mode,
    seed: u64,
    out: &'a PathBuf,
}

pub fn run(args: Args) -> CmdResult {
    let ck = load_checkpoint(&args.checkpoint).within(format!("loading {}", args.checkpoint.display()))?;
    let positions = positions::resolve(&args.positions)?;
    let model = &ck.model;
    let dataset = match args.mode {
        Mode::Fixed => sample_fixed(&model.generator, &model.condition_scaler, &positions, args.seed),
        Mode::Variable => sample_variable(&model.generator, &model.condition_scaler, &positions, args.seed),
    }
    .within("sampling")?;
    save_dataset(&dataset, &args.out).within(format!("writing {}", args.out.display()))?;
    write_resolved(
        &resolved_beside(&args.out),
        &Resolved {
            command: "generate",
            checkpoint: &args.checkpoint,
            checkpoint_step: ck.step,
            positions: &args.positions,
            num_positions: positions.len(),
            mode: args.mode,
            seed: args.seed,
            out: &args.out,
        },
    )?;
    println!("wrote {} samples to {}", dataset.len(), args.out.display());
    Ok(())
}
