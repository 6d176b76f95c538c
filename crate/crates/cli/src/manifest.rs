//! Run manifest: the reproducibility record every training run writes.

use std::path::Path;

use anyhow::Context;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// Content hash of a file, hex-encoded SHA-256.
pub fn file_sha256(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

pub struct RunManifest {
    pub seed: u64,
    pub ablation: String,
    pub iterations: usize,
    /// Full configuration snapshot (the flat key=value text).
    pub config_text: String,
    pub dataset_sha256: String,
    pub created_unix: u64,
    pub metrics_csv: String,
    pub final_checkpoint: String,
}

pub fn manifest_to_string(m: &RunManifest) -> String {
    let doc: Value = json!({
        "schema_version": 1,
        "seed": m.seed,
        "ablation": m.ablation,
        "iterations": m.iterations,
        "config": m.config_text,
        "dataset_sha256": m.dataset_sha256,
        "created_unix": m.created_unix,
        "outputs": {
            "metrics_csv": m.metrics_csv,
            "final_checkpoint": m.final_checkpoint,
        },
    });
    serde_json::to_string_pretty(&doc).expect("manifest serializes")
}
