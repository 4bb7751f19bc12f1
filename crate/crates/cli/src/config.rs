//! Experiment configuration: one JSON document with an optional section per
//! subcommand. Unknown keys are rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sotlab_core::degrade::{DegradationSpec, SceneModel};
use sotlab_core::sparsity::{BinLayout, DEFAULT_BINS};
use sotlab_core::train::TrainConfig;

use crate::error::{CliError, Result};
use crate::workspace::read_json;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example1: Option<Example1Config>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analyze: Option<AnalyzeConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalConfig>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p).map_err(|e| match e {
                CliError::Json { path, source } => {
                    CliError::Validation(format!("invalid config {}: {source}", path.display()))
                }
                other => other,
            }),
            None => Ok(Self::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub p1: f64,
    pub ptilde1: f64,
    /// `"l2"` for squared ℓ2, `"l<q>"` (e.g. `"l0"`, `"l0.5"`, `"l1"`) for ℓq.
    pub costs: Vec<String>,
    pub oracle: bool,
    pub literal: bool,
    pub sweep: Option<SweepConfig>,
}

impl Default for Example1Config {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 0.1,
            m: 11,
            p1: 0.5,
            ptilde1: 0.5,
            costs: vec!["l2".into(), "l1".into()],
            oracle: false,
            literal: false,
            sweep: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub m: Vec<usize>,
    pub q: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { a: vec![0.5, 1.0, 2.0], b: vec![0.05, 0.1, 0.2], m: vec![1, 5, 11, 50, 100], q: vec![0.0, 0.5, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub nbins: usize,
    pub max_magnitude: f64,
    pub layout: BinLayout,
    pub include_dc: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self { nbins: DEFAULT_BINS, max_magnitude: 1.0, layout: BinLayout::Linear, include_dc: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub count: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub scene: SceneModel,
    pub degradation: DegradationSpec,
    /// Master seed; per-image scene and degradation seeds are drawn from it
    /// and recorded in the manifest.
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            count: 16,
            height: 32,
            width: 32,
            channels: 1,
            scene: SceneModel::PiecewiseConstant,
            degradation: DegradationSpec::FreqSparse { k: 8, amplitude: 0.5, support_seed: Some(7) },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub peak: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { peak: 1.0 }
    }
}
