//! Position lists given on the command line.
//!
//! - `grid:xmin,xmax,nx,ymin,ymax,ny`: serpentine grid, row by row.
//! - `dataset:<path>`: positions of every datapoint of a CSIT file.
//! - anything else: a CSV file with an `x,y` header.

use std::fs::File;
use std::path::Path;

use csigan_core::load_dataset;
use csigan_core::synth::serpentine_grid;
use serde::{Deserialize, Serialize};

use crate::exit::{CmdResult, CoreContext, Failure, OrFail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub x: f64,
    pub y: f64,
}

pub fn parse_grid(spec: &str) -> CmdResult<Vec<[f64; 2]>> {
    let fields: Vec<&str> = spec.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(Failure::usage(format!("grid needs xmin,xmax,nx,ymin,ymax,ny, got `{spec}`")));
    }
    let num = |i: usize| fields[i].parse::<f64>().or_usage(format!("grid field `{}`", fields[i]));
    let count = |i: usize| fields[i].parse::<usize>().or_usage(format!("grid count `{}`", fields[i]));
    let (x0, x1, nx) = (num(0)?, num(1)?, count(2)?);
    let (y0, y1, ny) = (num(3)?, num(4)?, count(5)?);
    if nx == 0 || ny == 0 {
        return Err(Failure::usage("grid counts must be positive"));
    }
    if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
        return Err(Failure::usage("grid bounds must be finite"));
    }
    Ok(serpentine_grid([x0, y0], [x1, y1], nx, ny))
}

pub fn read_csv(path: &Path) -> CmdResult<Vec<[f64; 2]>> {
    let file = File::open(path).or_data(format!("opening {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(file);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<PositionRow>().enumerate() {
        let row = row.or_data(format!("{} row {}", path.display(), i + 1))?;
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(Failure::data(format!("{} row {}: non-finite position", path.display(), i + 1)));
        }
        out.push([row.x, row.y]);
    }
    Ok(out)
}

pub fn resolve(spec: &str) -> CmdResult<Vec<[f64; 2]>> {
    if let Some(grid) = spec.strip_prefix("grid:") {
        parse_grid(grid)
    } else if let Some(path) = spec.strip_prefix("dataset:") {
        Ok(load_dataset(path).within(format!("loading {path}"))?.positions())
    } else {
        read_csv(Path::new(spec))
    }
}
