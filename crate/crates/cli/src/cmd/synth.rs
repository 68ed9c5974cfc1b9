use std::path::PathBuf;

use csigan_core::synth::synth_dataset;
use csigan_core::{save_dataset, Scenario};
use serde::Serialize;

use crate::config::{load_scenario, resolved_beside, write_resolved};
use crate::exit::{CmdResult, CoreContext};
use crate::positions;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Scenario TOML: a full scenario or `preset = "demo"` plus geometry.
    #[arg(long)]
    scenario: PathBuf,
    /// `grid:xmin,xmax,nx,ymin,ymax,ny`, `dataset:<path>` or an `x,y` CSV.
    #[arg(long)]
    positions: String,
    /// Output CSIT file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    positions: &'a str,
    num_positions: usize,
    out: &'a PathBuf,
    scenario: &'a Scenario,
}

pub fn run(args: Args) -> CmdResult {
    let scenario = load_scenario(&args.scenario)?;
    let positions = positions::resolve(&args.positions)?;
    let dataset = synth_dataset(&scenario, &positions).within("synthesizing")?;
    save_dataset(&dataset, &args.out).within(format!("writing {}", args.out.display()))?;
    write_resolved(
        &resolved_beside(&args.out),
        &Resolved { command: "synth", positions: &args.positions, num_positions: positions.len(), out: &args.out, scenario: &scenario },
    )?;
    println!("wrote {} datapoints to {}", dataset.len(), args.out.display());
    Ok(())
}
