#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn sotlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sotlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("SOTLAB_OUTPUT_ROOT")
        .output()
        .expect("run sotlab")
}

pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sotlab(dir, args);
    assert!(out.status.success(), "sotlab {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Every file below `root` except run sidecars, keyed by relative path.
pub fn primary_outputs(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, acc);
            } else if path.file_name().unwrap() != "run_info.json" {
                acc.insert(path.strip_prefix(base).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

pub const SMALL_EXPERIMENT: &str = r#"{
  "synth": {"count": 6, "height": 16, "width": 16, "scene": {"model": "piecewise-constant"},
            "degradation": {"kind": "freq-sparse", "k": 4, "amplitude": 0.3, "support_seed": 7}, "seed": 1},
  "train": {"q": 1.0, "eps": 0.1, "lambda": 10.0, "learning_rate": 1e-3, "batch_size": 4, "iterations": 12, "model_size": 16}
}"#;

/// Writes the small experiment config and two unpaired synthetic datasets.
pub fn small_setup(dir: &Path) {
    fs::write(dir.join("exp.json"), SMALL_EXPERIMENT).unwrap();
    ok(dir, &["synth", "--config", "exp.json", "--out", "a"]);
    ok(dir, &["synth", "--config", "exp.json", "--seed", "2", "--out", "b"]);
}
