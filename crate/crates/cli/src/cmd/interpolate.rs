use std::path::PathBuf;

use clap::ValueEnum;
use csigan_core::interp::Source;
use csigan_core::{build_interpolant, load_dataset, save_dataset, Fallback};
use serde::Serialize;

use crate::config::{resolved_beside, write_resolved};
use crate::exit::{CmdResult, CoreContext};
use crate::positions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackArg {
    /// Copy the nearest training datapoint.
    Nn,
    /// Fail on the first query outside the convex hull.
    Error,
}

impl From<FallbackArg> for Fallback {
    fn from(f: FallbackArg) -> Self {
        match f {
            FallbackArg::Nn => Fallback::NearestNeighbor,
            FallbackArg::Error => Fallback::Error,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Training CSIT dataset the interpolant is built on.
    #[arg(long)]
    train: PathBuf,
    /// `grid:...`, `dataset:<path>` or an `x,y` CSV.
    #[arg(long)]
    positions: String,
    #[arg(long)]
    out: PathBuf,
    /// Policy for queries outside the convex hull.
    #[arg(long, value_enum, default_value_t = FallbackArg::Nn)]
    fallback: FallbackArg,
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    train: &'a PathBuf,
    positions: &'a str,
    num_positions: usize,
    fallback: FallbackArg,
    fallback_used: usize,
    out: &'a PathBuf,
}

pub fn run(args: Args) -> CmdResult {
    let train = load_dataset(&args.train).within(format!("loading {}", args.train.display()))?;
    let positions = positions::resolve(&args.positions)?;
    let interpolant = build_interpolant(&train, args.fallback.into()).within("building the triangulation")?;
    let (dataset, sources) = interpolant.interpolate_dataset(&positions).within("interpolating")?;
    let fallback_used = sources.iter().filter(|s| matches!(s, Source::NearestNeighbor(_))).count();
    save_dataset(&dataset, &args.out).within(format!("writing {}", args.out.display()))?;
    write_resolved(
        &resolved_beside(&args.out),
        &Resolved {
            command: "interpolate",
            train: &args.train,
            positions: &args.positions,
            num_positions: positions.len(),
            fallback: args.fallback,
            fallback_used,
            out: &args.out,
        },
    )?;
    println!(
        "wrote {} interpolated datapoints to {} ({} outside the hull)",
        dataset.len(),
        args.out.display(),
        fallback_used
    );
    Ok(())
}
