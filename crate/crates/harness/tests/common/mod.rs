#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use faithkit::synthetic::SyntheticConfig;
use faithkit_harness::synthetic::write_experiment;
use tempfile::TempDir;

pub fn small_corpus() -> SyntheticConfig {
    SyntheticConfig {
        train: 300,
        dev: 60,
        test: 60,
        min_len: 8,
        max_len: 14,
        dim: 16,
        ..SyntheticConfig::default()
    }
}

/// A synthetic experiment directory; `extra` config lines are appended.
pub fn experiment(extra: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let cfg = write_experiment(dir.path(), &small_corpus(), 3, &format!("hidden = 16\n{extra}")).unwrap();
    (dir, cfg)
}

pub fn faithkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faithkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// An experiment with a trained checkpoint already in place.
pub fn trained(extra: &str) -> (TempDir, PathBuf) {
    let (dir, cfg) = experiment(extra);
    let out = faithkit(&["train", "--config", path_arg(&cfg)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (dir, cfg)
}
