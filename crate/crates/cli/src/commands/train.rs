use std::path::{Path, PathBuf};

use serde_json::json;
use sotlab_core::train::{initial_model, log_to_csv, train_from, Checkpoint, TrainConfig, TrainStatus};
use sotlab_core::Image;

use super::read_dir_images;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::workspace::{read_json, write_file, write_json, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Experiment config; its `train` section provides the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of degraded images (the `Y` pool).
    #[arg(long)]
    degraded: PathBuf,
    /// Directory of clean images (the `X` pool), unpaired with `--degraded`.
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Continue from a checkpoint written by an earlier run with the same settings.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Also write `checkpoint_<iter>.json` every this many iterations.
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    #[arg(long, default_value = "out/train")]
    out: PathBuf,
}

/// Splits every image into non-overlapping model-sized tiles.
fn tiles(images: Vec<(String, Image)>, size: usize, dir: &Path) -> Result<Vec<Image>> {
    let mut out = Vec::new();
    for (name, image) in images {
        if image.channels() != 1 {
            return Err(CliError::Validation(format!("{}: training uses single-channel images", dir.join(&name).display())));
        }
        if image.height() % size != 0 || image.width() % size != 0 {
            return Err(CliError::Validation(format!(
                "{}: {}x{} is not a multiple of the model size {size}",
                dir.join(&name).display(),
                image.height(),
                image.width()
            )));
        }
        for top in (0..image.height()).step_by(size) {
            for left in (0..image.width()).step_by(size) {
                out.push(image.crop(top, left, size, size)?);
            }
        }
    }
    Ok(out)
}

fn resolve(args: &Args, base: Option<TrainConfig>) -> TrainConfig {
    let mut cfg = base.unwrap_or_default();
    if let Some(v) = args.q {
        cfg.q = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    cfg
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("train");
    let config = ExperimentConfig::load(args.config.as_deref().map(|p| ws.input(p)).as_deref())?;
    let cfg = resolve(&args, config.train);
    cfg.validate()?;

    let (mut model, start) = match &args.resume {
        Some(path) => {
            let ck: Checkpoint = read_json(&ws.input(path))?;
            if (TrainConfig { iterations: cfg.iterations, ..ck.config }) != cfg {
                return Err(CliError::Validation(format!(
                    "{}: checkpoint settings differ from this run (only `iterations` may change on resume)",
                    path.display()
                )));
            }
            if ck.iteration > cfg.iterations {
                return Err(CliError::Validation(format!("checkpoint is at iteration {}, beyond the requested {}", ck.iteration, cfg.iterations)));
            }
            (ck.model()?, ck.iteration)
        }
        None => (initial_model(&cfg)?, 0),
    };

    let degraded_dir = ws.input(&args.degraded);
    let clean_dir = ws.input(&args.clean);
    let degraded = tiles(read_dir_images(&degraded_dir)?, cfg.model_size, &degraded_dir)?;
    let clean = tiles(read_dir_images(&clean_dir)?, cfg.model_size, &clean_dir)?;

    let out = ws.output(&args.out);
    let mut log = Vec::new();
    let mut iter = start;
    let mut failure = None;
    while iter < cfg.iterations {
        let next = match args.checkpoint_every {
            0 => cfg.iterations,
            every => ((iter / every + 1) * every).min(cfg.iterations),
        };
        let outcome = train_from(&TrainConfig { iterations: next, ..cfg }, model, iter, &degraded, &clean)?;
        log.extend(outcome.log);
        model = outcome.model;
        iter = outcome.iterations_done;
        if let TrainStatus::Diverged { iteration } = outcome.status {
            failure = Some(iteration);
            break;
        }
        if args.checkpoint_every > 0 && iter % args.checkpoint_every == 0 && iter < cfg.iterations {
            write_json(&out.join(format!("checkpoint_{iter:06}.json")), &Checkpoint::new(&model, &cfg, iter))?;
        }
    }

    write_json(&out.join("model.json"), &Checkpoint::new(&model, &cfg, iter))?;
    write_file(&out.join("train_log.csv"), log_to_csv(&cfg, &log))?;
    let resolved = ExperimentConfig { train: Some(cfg), ..Default::default() };
    record.finish(
        &out,
        &resolved,
        json!({
            "config": args.config,
            "degraded": args.degraded,
            "clean": args.clean,
            "resume": args.resume,
            "checkpoint_every": args.checkpoint_every,
        }),
    )?;
    if let Some(iteration) = failure {
        return Err(CliError::Numerical(format!(
            "loss became non-finite at iteration {iteration}; model.json holds the last finite state (iteration {iter})"
        )));
    }
    if let Some(last) = log.last() {
        println!(
            "{}: {} iterations, final fidelity {} divergence {} total {}",
            cfg.label(),
            iter,
            last.fidelity,
            last.divergence,
            last.total
        );
    }
    Ok(())
}
