use std::path::PathBuf;

use serde_json::json;
use sotlab_core::metrics::{psnr, ssim, ImageMetrics, MetricReport};

use super::read_pairs;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::workspace::{write_json, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of restored images.
    #[arg(long)]
    restored: PathBuf,
    /// Directory of reference images with the same file names.
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    peak: Option<f64>,
    /// Directory receiving `report.json`.
    #[arg(long, default_value = "out/eval")]
    out: PathBuf,
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("eval");
    let config = ExperimentConfig::load(args.config.as_deref().map(|p| ws.input(p)).as_deref())?;
    let mut cfg = config.eval.unwrap_or_default();
    if let Some(v) = args.peak {
        cfg.peak = v;
    }
    if !(cfg.peak > 0.0 && cfg.peak.is_finite()) {
        return Err(CliError::Validation(format!("peak must be positive, got {}", cfg.peak)));
    }
    let pairs = read_pairs(&ws.input(&args.restored), &ws.input(&args.reference))?;
    let images = pairs
        .iter()
        .map(|(name, x, r)| Ok(ImageMetrics { name: name.clone(), psnr_db: psnr(x, r, cfg.peak)?, ssim: ssim(x, r, cfg.peak)? }))
        .collect::<Result<Vec<_>>>()?;
    let report = MetricReport::from_images(images);
    println!("{} images: mean PSNR {} dB, mean SSIM {:.6}", report.images.len(), report.mean_psnr_db, report.mean_ssim);
    let out = ws.output(&args.out);
    write_json(&out.join("report.json"), &report)?;
    let resolved = ExperimentConfig { eval: Some(cfg), ..Default::default() };
    record.finish(&out, &resolved, json!({ "config": args.config, "restored": args.restored, "reference": args.reference }))
}
