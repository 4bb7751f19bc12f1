//! Path resolution and output helpers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Overrides where relative output paths are placed.
pub const OUTPUT_ROOT_ENV: &str = "SOTLAB_OUTPUT_ROOT";

/// Relative inputs resolve against `root`; relative outputs against
/// `$SOTLAB_OUTPUT_ROOT` (itself relative to `root`) or `root`.
#[derive(Debug, Clone)]
pub struct Workspace {
    root: PathBuf,
    output_root: PathBuf,
}

impl Workspace {
    pub fn new(root: Option<PathBuf>) -> Result<Self> {
        let root = match root {
            Some(r) => r,
            None => std::env::current_dir().map_err(|source| CliError::Io { path: ".".into(), source })?,
        };
        let output_root = match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(v) if !v.is_empty() => root.join(PathBuf::from(v)),
            _ => root.clone(),
        };
        Ok(Self { root, output_root })
    }

    pub fn input(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }

    pub fn output(&self, path: &Path) -> PathBuf {
        self.output_root.join(path)
    }
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, to_json(value))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

/// `*.pgm` / `*.ppm` files of a directory, sorted by file name.
pub fn list_images(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm")) {
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            out.push((name, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Writes the resolved configuration (a valid `--config` input on its own)
/// and a sidecar with wall-clock information, which is the only place
/// timestamps appear.
pub struct RunRecord {
    command: &'static str,
    started: SystemTime,
    clock: Instant,
}

impl RunRecord {
    pub fn start(command: &'static str) -> Self {
        Self { command, started: SystemTime::now(), clock: Instant::now() }
    }

    pub fn finish(&self, out_dir: &Path, resolved: &ExperimentConfig, inputs: serde_json::Value) -> Result<()> {
        write_json(&out_dir.join("resolved_config.json"), resolved)?;
        let started = self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let info = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix_s": started,
            "elapsed_ms": self.clock.elapsed().as_millis() as u64,
            "inputs": inputs,
        });
        write_json(&out_dir.join("run_info.json"), &info)
    }
}
