use std::path::PathBuf;

use serde_json::json;
use sotlab_core::pnm::encode;
use sotlab_core::restore;
use sotlab_core::train::Checkpoint;

use super::read_dir_images;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::workspace::{read_json, write_file, RunRecord, Workspace};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Checkpoint written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Directory of degraded images.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "out/restore")]
    out: PathBuf,
}

pub fn run(ws: &Workspace, args: Args) -> Result<()> {
    let record = RunRecord::start("restore");
    let checkpoint: Checkpoint = read_json(&ws.input(&args.model))?;
    let model = checkpoint.model()?;
    let out = ws.output(&args.out);
    let images = read_dir_images(&ws.input(&args.input))?;
    for (name, image) in &images {
        write_file(&out.join("restored").join(name), encode(&restore(&model, image)?))?;
    }
    println!("restored {} images into {}", images.len(), out.join("restored").display());
    let resolved = ExperimentConfig { train: Some(checkpoint.config), ..Default::default() };
    record.finish(&out, &resolved, json!({ "model": args.model, "input": args.input }))
}
