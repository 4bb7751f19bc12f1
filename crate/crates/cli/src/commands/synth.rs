use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use sotlab_core::degrade::gen_clean;
use sotlab_core::pnm::encode;

use crate::config::{ExperimentConfig, SynthConfig};
use crate::error::{CliError, Result};
use crate::workspace::{write_file, write_json, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Experiment config with a `synth` section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out/synth")]
    out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ManifestEntry {
    file: String,
    scene_seed: u64,
    degradation_seed: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    spec: &'a SynthConfig,
    /// 8-bit files clamp values to [0, 1].
    quantization: &'static str,
    images: Vec<ManifestEntry>,
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("synth");
    let config = ExperimentConfig::load(args.config.as_deref().map(|p| ws.input(p)).as_deref())?;
    let mut cfg = config.synth.unwrap_or_default();
    if let Some(v) = args.count {
        cfg.count = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if cfg.channels != 1 && cfg.channels != 3 {
        return Err(CliError::Validation(format!("channels must be 1 or 3, got {}", cfg.channels)));
    }
    let ext = if cfg.channels == 1 { "pgm" } else { "ppm" };
    let out = ws.output(&args.out);
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut images = Vec::with_capacity(cfg.count);
    for i in 0..cfg.count {
        let scene_seed: u64 = seeds.random();
        let degradation_seed: u64 = seeds.random();
        let clean = gen_clean(cfg.height, cfg.width, cfg.channels, cfg.scene, scene_seed)?;
        let (degraded, _) = cfg.degradation.apply(&clean, degradation_seed)?;
        let file = format!("{i:05}.{ext}");
        write_file(&out.join("clean").join(&file), encode(&clean))?;
        write_file(&out.join("degraded").join(&file), encode(&degraded))?;
        images.push(ManifestEntry { file, scene_seed, degradation_seed });
    }
    write_json(&out.join("manifest.json"), &Manifest { spec: &cfg, quantization: "8-bit, clamped to [0, 1]", images })?;
    println!("wrote {} image pairs to {}", cfg.count, out.display());
    let resolved = ExperimentConfig { synth: Some(cfg), ..Default::default() };
    record.finish(&out, &resolved, json!({ "config": args.config }))
}
