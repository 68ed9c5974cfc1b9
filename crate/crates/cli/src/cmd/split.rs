use std::path::PathBuf;

use csigan_core::dataset::split_indices;
use csigan_core::{load_dataset, save_dataset, SplitSpec};
use serde::Serialize;

use crate::config::{resolved_beside, write_resolved};
use crate::exit::{CmdResult, CoreContext, ExitKind, Failure};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    #[arg(long, default_value_t = 0)]
    test_offset: usize,
    #[arg(long, default_value_t = 2)]
    train_offset: usize,
    /// `x,y`; defaults to the centre of the positions' bounding box.
    #[arg(long, value_parser = parse_point)]
    hole_center: Option<[f64; 2]>,
    /// Metres; 0 still removes a point lying exactly on the centre.
    #[arg(long, default_value_t = 4.0)]
    hole_diameter: f64,
    #[arg(long)]
    out_train: PathBuf,
    #[arg(long)]
    out_test: PathBuf,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [x, y] = parts[..] else {
        return Err(format!("expected x,y, got `{s}`"));
    };
    let num = |v: &str| v.parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([num(x)?, num(y)?])
}

fn bbox_center(positions: &[[f64; 2]]) -> [f64; 2] {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in positions {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0]
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    dataset: &'a PathBuf,
    out_train: &'a PathBuf,
    out_test: &'a PathBuf,
    train_len: usize,
    test_len: usize,
    split: SplitSpec,
}

pub fn run(args: Args) -> CmdResult {
    let dataset = load_dataset(&args.dataset).within(format!("loading {}", args.dataset.display()))?;
    let positions = dataset.positions();
    let spec = SplitSpec {
        stride: args.stride,
        test_offset: args.test_offset,
        train_offset: args.train_offset,
        hole_center: args.hole_center.unwrap_or_else(|| bbox_center(&positions)),
        hole_diameter: args.hole_diameter,
    };
    let idx = split_indices(&positions, &spec).within("splitting")?;
    let train = dataset.subset(&idx.train);
    let test = dataset.subset(&idx.test);
    save_dataset(&train, &args.out_train).within(format!("writing {}", args.out_train.display()))?;
    save_dataset(&test, &args.out_test).within(format!("writing {}", args.out_test.display()))?;
    write_resolved(
        &resolved_beside(&args.out_train),
        &Resolved {
            command: "split",
            dataset: &args.dataset,
            out_train: &args.out_train,
            out_test: &args.out_test,
            train_len: train.len(),
            test_len: test.len(),
            split: spec,
        },
    )?;
    println!("train: {}", train.len());
    println!("test: {}", test.len());
    if train.is_empty() {
        return Err(Failure::new(
            ExitKind::EmptyTrain,
            anyhow::anyhow!("training set is empty; check the offsets and the hole"),
        ));
    }
    Ok(())
}
