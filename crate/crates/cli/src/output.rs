//! Output-directory plumbing: deterministic manifests, CSV writers, and the
//! self-contained artifact bundle a fusion run leaves behind.

use anyhow::{Context, Result};
use molfuse_core::dataio::{format_full, FeatureTable};
use molfuse_core::fusion::{FusionFit, FusionSpec};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// FNV-1a 64-bit hash, hex-encoded; stable fingerprint for config snapshots.
pub fn fnv1a_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// Reproducibility record written into every output directory. Contains the
/// full config snapshot; re-running the command from it reproduces all
/// CSV/JSON outputs bit-identically.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub tool_version: String,
    pub config_text: String,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_text: &str) -> Manifest {
        Manifest {
            command: command.to_string(),
            seed,
            config_hash: fnv1a_hex(config_text.as_bytes()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_text: config_text.to_string(),
        }
    }
}

pub fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Everything a later `report` invocation needs: the fitted fusion plus the
/// feature labels of each source table.
#[derive(Debug, Serialize, Deserialize)]
pub struct FusionArtifacts {
    pub spec: FusionSpec,
    pub dataset_names: Vec<String>,
    pub feature_labels: Vec<Vec<String>>,
    pub fit: FusionFit,
}

impl FusionArtifacts {
    pub fn new(spec: &FusionSpec, tables: &[FeatureTable], fit: FusionFit) -> FusionArtifacts {
        FusionArtifacts {
            spec: spec.clone(),
            dataset_names: tables.iter().map(|t| t.name.clone()).collect(),
            feature_labels: tables.iter().map(|t| t.features.clone()).collect(),
            fit,
        }
    }
}

/// Write rows of pre-formatted cells as CSV.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn csv_cell(v: f64) -> String {
    format_full(v)
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
