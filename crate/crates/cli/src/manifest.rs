//! Run manifests: every output directory carries a `manifest.json` echoing
//! the full configuration, seed and version, and a run can be reproduced
//! byte-identically from it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::CliError;
use crate::formats::{read_to_string, write_string};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Manifest {
    Simulate {
        version: String,
        seed: u64,
        p: usize,
        k: usize,
        tasks: usize,
        delta: usize,
        n_per_task: Vec<usize>,
        deflation: f64,
    },
    Infer {
        version: String,
        seed: u64,
        data: String,
        method: String,
        alpha: f64,
        lambda: Option<f64>,
        grid_size: usize,
        grid_ratio: f64,
        symmetrization: String,
        center: bool,
        standardize: bool,
        task_weights: Option<Vec<f64>>,
        rng_algorithm: String,
    },
    Eval {
        version: String,
        inferred: String,
        truth: String,
        signed: bool,
    },
    Sweep {
        version: String,
        seed: u64,
        p: usize,
        k: usize,
        tasks: usize,
        delta: usize,
        n_per_task: Vec<usize>,
        deflation: f64,
        methods: Vec<String>,
        replicates: usize,
        grid_size: usize,
        grid_ratio: f64,
        alpha: f64,
        symmetrization: String,
        rng_algorithm: String,
    },
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Data(format!("manifest serialization: {e}")))?;
    write_string(&dir.join("manifest.json"), &(json + "\n"))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join("manifest.json");
    let text = read_to_string(&path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
