use std::path::{Path, PathBuf};

use csigan_core::metrics::{dataset_delay_spreads, gaussian_fit_samples, jsd_matrix, summarize_dataset, JsdMatrix, DEFAULT_BINS};
use csigan_core::{load_dataset, CsiDataset};
use serde::Serialize;

use crate::config::write_resolved;
use crate::exit::{CmdResult, CoreContext, Failure, OrFail};

pub const JSD_FILE: &str = "jsd.csv";
pub const HISTOGRAM_FILE: &str = "histograms.csv";
pub const RESOLVED_CONFIG: &str = "resolved.toml";
pub const GAUSSIAN_LABEL: &str = "gaussian";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Reference dataset, `[label=]path`. Gaussian-fit moments come from it.
    #[arg(long)]
    reference: String,
    /// Datasets compared against the reference, each `[label=]path`.
    #[arg(long, num_args = 0..)]
    candidates: Vec<String>,
    /// Add a sample drawn from a normal fit to the reference delay spreads.
    #[arg(long)]
    gaussian_baseline: bool,
    /// Histogram bins over the pooled delay-spread range.
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// Seed of the Gaussian-fit sample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn datapoint_file(label: &str) -> String {
    format!("datapoints_{label}.csv")
}

/// `label=path`, or a bare path labeled by its file stem.
fn labeled(arg: &str) -> (String, PathBuf) {
    match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| arg.to_string());
            (label, path)
        }
    }
}

fn ns(seconds: f64) -> f64 {
    seconds * 1e9
}

fn write_datapoints(path: &Path, dataset: &CsiDataset) -> CmdResult {
    let arrays = dataset.geometry.num_arrays;
    let mut w = csv::Writer::from_path(path).or_data(format!("creating {}", path.display()))?;
    let mut header = vec!["x".to_string(), "y".to_string()];
    for prefix in ["power_db", "delay_spread_ns", "azimuth_rad"] {
        header.extend((0..arrays).map(|b| format!("{prefix}_{b}")));
    }
    w.write_record(&header).or_data("writing datapoints")?;
    for s in summarize_dataset(dataset) {
        let mut row = vec![s.position[0], s.position[1]];
        row.extend(s.power.iter().map(|&p| dataset.power_db(p)));
        row.extend(s.mean_delay_spread.iter().map(|&d| ns(d)));
        row.extend(s.azimuth.iter().map(|a| a.unwrap_or(f64::NAN)));
        w.write_record(row.iter().map(f64::to_string)).or_data("writing datapoints")?;
    }
    w.flush().or_data("writing datapoints")
}

fn write_histograms(path: &Path, m: &JsdMatrix) -> CmdResult {
    let mut w = csv::Writer::from_path(path).or_data(format!("creating {}", path.display()))?;
    let mut header = vec!["lower_ns".to_string(), "upper_ns".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).or_data("writing histograms")?;
    let edges = &m.densities[0].edges;
    for k in 0..edges.len() - 1 {
        let mut row = vec![ns(edges[k]), ns(edges[k + 1])];
        row.extend(m.densities.iter().map(|d| d.probs[k]));
        w.write_record(row.iter().map(f64::to_string)).or_data("writing histograms")?;
    }
    w.flush().or_data("writing histograms")
}

fn write_jsd(path: &Path, m: &JsdMatrix) -> CmdResult {
    let mut w = csv::Writer::from_path(path).or_data(format!("creating {}", path.display()))?;
    let mut header = vec!["set".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).or_data("writing distances")?;
    for (label, row) in m.labels.iter().zip(&m.values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).or_data("writing distances")?;
    }
    w.flush().or_data("writing distances")
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 { f64::NAN } else { sum / n as f64 }
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    reference: &'a str,
    candidates: &'a [String],
    labels: &'a [String],
    gaussian_baseline: bool,
    bins: usize,
    seed: u64,
}

pub fn run(args: Args) -> CmdResult {
    if args.candidates.is_empty() {
        return Err(Failure::usage("no candidate datasets given"));
    }
    if args.bins < 2 {
        return Err(Failure::usage(format!("need at least 2 bins, got {}", args.bins)));
    }
    let mut sets: Vec<(String, CsiDataset)> = Vec::new();
    for arg in std::iter::once(&args.reference).chain(&args.candidates) {
        let (label, path) = labeled(arg);
        if label == GAUSSIAN_LABEL || sets.iter().any(|(l, _)| *l == label) {
            return Err(Failure::usage(format!("duplicate or reserved label `{label}`; use label=path")));
        }
        let ds = load_dataset(&path).within(format!("loading {}", path.display()))?;
        sets.push((label, ds));
    }
    std::fs::create_dir_all(&args.out).or_data(format!("creating {}", args.out.display()))?;

    for (label, ds) in &sets {
        write_datapoints(&args.out.join(datapoint_file(label)), ds)?;
    }
    let mut spreads: Vec<(String, Vec<f64>)> =
        sets.iter().map(|(l, ds)| (l.clone(), dataset_delay_spreads(ds))).collect();
    if args.gaussian_baseline {
        let reference = &spreads[0].1;
        let sample = gaussian_fit_samples(reference, reference.len(), args.seed).within("fitting the Gaussian baseline")?;
        spreads.push((GAUSSIAN_LABEL.to_string(), sample));
    }
    let matrix = jsd_matrix(&spreads, args.bins).within("binning delay spreads")?;
    write_histograms(&args.out.join(HISTOGRAM_FILE), &matrix)?;
    write_jsd(&args.out.join(JSD_FILE), &matrix)?;
    write_resolved(
        &args.out.join(RESOLVED_CONFIG),
        &Resolved {
            command: "evaluate",
            reference: &args.reference,
            candidates: &args.candidates,
            labels: &matrix.labels,
            gaussian_baseline: args.gaussian_baseline,
            bins: args.bins,
            seed: args.seed,
        },
    )?;

    println!("{:<14} {:>7} {:>10} {:>9} {:>10} {:>9}", "set", "points", "power dB", "DS ns", "AoA deg", "JSD ref");
    for (i, (label, values)) in spreads.iter().enumerate() {
        let (points, power, aoa) = match sets.get(i) {
            Some((_, ds)) => {
                let summary = summarize_dataset(ds);
                let power = mean(summary.iter().flat_map(|s| s.power.iter().map(|&p| ds.power_db(p))));
                let aoa = mean(summary.iter().flat_map(|s| s.azimuth.iter().map(|a| a.unwrap_or(f64::NAN).to_degrees())));
                (ds.len().to_string(), format!("{power:.2}"), format!("{aoa:.2}"))
            }
            None => ("-".into(), "-".into(), "-".into()),
        };
        let ds = mean(values.iter().map(|&v| ns(v)));
        println!(
            "{:<14} {:>7} {:>10} {:>9.2} {:>10} {:>9.3}",
            label, points, power, ds, aoa, matrix.values[0][i]
        );
    }
    println!("reports written to {}", args.out.display());
    Ok(())
}
