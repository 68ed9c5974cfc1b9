use std::fs::File;
use std::path::{Path, PathBuf};

use csigan_core::wgan::{load_checkpoint, save_checkpoint, LogRow, Trainer};
use csigan_core::{load_dataset, Error, TrainingConfig};
use serde::Serialize;

use crate::config::{load_training, write_resolved};
use crate::exit::{CmdResult, CoreContext, Failure, OrFail};

pub const LOG_FILE: &str = "log.csv";
pub const FINAL_CHECKPOINT: &str = "final.wgck";
pub const DIAGNOSTIC_CHECKPOINT: &str = "diagnostic.wgck";
pub const RESOLVED_CONFIG: &str = "resolved.toml";
pub const LOG_HEADER: [&str; 5] = ["step", "critic_loss", "gen_loss", "real_score", "fake_score"];

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Training CSIT dataset.
    #[arg(long)]
    train: PathBuf,
    /// Training TOML. Required unless resuming.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for checkpoints, the log and the resolved config.
    #[arg(long)]
    out: PathBuf,
    /// Continue from this checkpoint. A given config may only change
    /// `total_steps` and `checkpoint_every`.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// No progress lines on stderr.
    #[arg(long)]
    quiet: bool,
}

pub fn checkpoint_name(step: u64) -> String {
    format!("step-{step:08}.wgck")
}

#[derive(Serialize)]
struct Resolved<'a> {
    command: &'static str,
    train: &'a PathBuf,
    resume: Option<&'a PathBuf>,
    start_step: u64,
    training: &'a TrainingConfig,
}

/// Rows of an earlier log up to and including `step`.
fn earlier_rows(path: &Path, step: u64) -> CmdResult<Vec<LogRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_path(path).or_data(format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for row in reader.deserialize::<LogRow>() {
        let row = row.or_data(format!("reading {}", path.display()))?;
        if row.step <= step {
            rows.push(row);
        }
    }
    Ok(rows)
}

fn merge_resumed(stored: &TrainingConfig, given: TrainingConfig) -> CmdResult<TrainingConfig> {
    let mut expected = stored.clone();
    expected.total_steps = given.total_steps;
    expected.checkpoint_every = given.checkpoint_every;
    if expected != given {
        return Err(Failure::usage("resume config differs from the checkpoint beyond total_steps and checkpoint_every"));
    }
    Ok(given)
}

pub fn run(args: Args) -> CmdResult {
    let train = load_dataset(&args.train).within(format!("loading {}", args.train.display()))?;
    std::fs::create_dir_all(&args.out).or_data(format!("creating {}", args.out.display()))?;
    let log_path = args.out.join(LOG_FILE);

    let (mut trainer, previous) = match &args.resume {
        Some(path) => {
            let mut ck = load_checkpoint(path).within(format!("loading {}", path.display()))?;
            if let Some(cfg) = &args.config {
                ck.config = merge_resumed(&ck.config, load_training(cfg)?)?;
            }
            let rows = earlier_rows(&log_path, ck.step)?;
            (Trainer::resume(ck, &train).within("resuming")?, rows)
        }
        None => {
            let Some(cfg) = &args.config else {
                return Err(Failure::usage("--config is required unless --resume is given"));
            };
            (Trainer::new(&train, load_training(cfg)?).within("initializing")?, Vec::new())
        }
    };
    let config = trainer.config().clone();
    write_resolved(
        &args.out.join(RESOLVED_CONFIG),
        &Resolved {
            command: "train",
            train: &args.train,
            resume: args.resume.as_ref(),
            start_step: trainer.step_count(),
            training: &config,
        },
    )?;

    let file = File::create(&log_path).or_data(format!("creating {}", log_path.display()))?;
    let mut log = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    log.write_record(LOG_HEADER).or_data("writing log")?;
    for row in &previous {
        log.serialize(row).or_data("writing log")?;
    }
    let every = config.checkpoint_every;
    let report = (config.total_steps / 20).max(1);
    let out = args.out.clone();
    let quiet = args.quiet;
    let result = trainer.run(|t, row| {
        log.serialize(row).map_err(|e| Error::Io(e.into()))?;
        if every > 0 && row.step % every == 0 {
            log.flush()?;
            save_checkpoint(&t.checkpoint(), out.join(checkpoint_name(row.step)))?;
        }
        if !quiet && row.step % report == 0 {
            eprintln!(
                "step {:>7}  critic {:>10.4}  generator {:>10.4}",
                row.step, row.critic_loss, row.gen_loss
            );
        }
        Ok(())
    });
    log.flush().or_data("writing log")?;

    match result {
        Ok(()) => {
            let path = args.out.join(FINAL_CHECKPOINT);
            save_checkpoint(&trainer.checkpoint(), &path).within(format!("writing {}", path.display()))?;
            println!("trained to step {}; checkpoint {}", trainer.step_count(), path.display());
            Ok(())
        }
        Err(e @ Error::NanLoss { .. }) => {
            let path = args.out.join(DIAGNOSTIC_CHECKPOINT);
            save_checkpoint(&trainer.checkpoint(), &path).within(format!("writing {}", path.display()))?;
            let mut f = Failure::from(e);
            f.error = f.error.context(format!("state at the abort saved to {}", path.display()));
            Err(f)
        }
        Err(e) => Err(e.into()),
    }
}
