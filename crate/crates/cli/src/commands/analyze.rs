use std::path::PathBuf;

use serde_json::json;
use sotlab_core::sparsity::{fit_generalized_gaussian, residual_spectrum_histogram, residual_spectrum_samples, BinLayout, HistogramParams};

use super::read_pairs;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::workspace::{write_file, write_json, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory of degraded images.
    #[arg(long)]
    degraded: PathBuf,
    /// Directory of clean images with the same file names.
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    nbins: Option<usize>,
    #[arg(long)]
    max_magnitude: Option<f64>,
    /// Geometric instead of linear bin edges.
    #[arg(long)]
    log_bins: bool,
    /// Leave the DC coefficient out of the histogram.
    #[arg(long)]
    exclude_dc: bool,
    #[arg(long, default_value = "out/analyze")]
    out: PathBuf,
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("analyze");
    let config = ExperimentConfig::load(args.config.as_deref().map(|p| ws.input(p)).as_deref())?;
    let mut cfg = config.analyze.unwrap_or_default();
    if let Some(v) = args.nbins {
        cfg.nbins = v;
    }
    if let Some(v) = args.max_magnitude {
        cfg.max_magnitude = v;
    }
    if args.log_bins {
        cfg.layout = BinLayout::Log;
    }
    if args.exclude_dc {
        cfg.include_dc = false;
    }
    let pairs: Vec<_> = read_pairs(&ws.input(&args.degraded), &ws.input(&args.clean))?
        .into_iter()
        .map(|(_, y, x)| (y, x))
        .collect();
    let params = HistogramParams { nbins: cfg.nbins, max_magnitude: cfg.max_magnitude, layout: cfg.layout, include_dc: cfg.include_dc };
    let hist = residual_spectrum_histogram(&pairs, &params)?;
    let samples = residual_spectrum_samples(&pairs)?;
    let fit = if samples.iter().all(|v| *v == 0.0) {
        json!({ "status": "undefined", "reason": "all residuals are zero" })
    } else {
        let fit = fit_generalized_gaussian(&samples)?;
        json!({
            "status": "ok",
            "alpha": fit.alpha,
            "gamma": fit.gamma,
            "hyper_laplacian": fit.gamma < 1.0,
            "diagnostics": fit.diagnostics,
            "samples": "real and imaginary parts of residual spectra",
        })
    };
    println!(
        "{} pairs, {} bins, overflow {}; fit: {}",
        hist.pair_count,
        hist.counts.len(),
        hist.overflow,
        match fit.get("gamma") {
            Some(g) => format!("gamma {g}"),
            None => "undefined (zero residuals)".into(),
        }
    );
    let out = ws.output(&args.out);
    write_file(&out.join("histogram.csv"), hist.to_csv())?;
    let report = json!({
        "pairs": hist.pair_count,
        "normalization": hist.normalization,
        "layout": hist.layout,
        "include_dc": hist.include_dc,
        "overflow": hist.overflow,
        "fit": fit,
    });
    write_json(&out.join("ggfit.json"), &report)?;
    let resolved = ExperimentConfig { analyze: Some(cfg), ..Default::default() };
    record.finish(&out, &resolved, json!({ "config": args.config, "degraded": args.degraded, "clean": args.clean }))
}
