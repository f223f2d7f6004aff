use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CliError, ExperimentConfig};
use crate::data::{PriceTable, ReturnMatrix, Scaler, SplitPlan};
use crate::io;

/// Prepared weekly data, persisted by `ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArtifact {
    pub format: String,
    pub version: u32,
    pub classes: Vec<String>,
    pub prices: PriceTable,
    pub returns: ReturnMatrix,
    pub split: SplitPlan,
    /// Fitted on the training rows only.
    pub scaler: Scaler,
}

pub const DATASET_FORMAT: &str = "hybrid-alloc/dataset";

/// Fixed file names under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset/dataset.json")
    }

    pub fn dataset_hash(&self) -> PathBuf {
        self.root.join("dataset/dataset.sha256")
    }

    pub fn forecaster(&self, asset: &str) -> PathBuf {
        self.root.join(format!("forecasters/{asset}.json"))
    }

    pub fn forecasts_json(&self) -> PathBuf {
        self.root.join("forecasts/forecasts.json")
    }

    pub fn forecasts_csv(&self) -> PathBuf {
        self.root.join("forecasts/forecasts.csv")
    }

    pub fn policy(&self, k: usize) -> PathBuf {
        self.root.join(format!("policies/k{k}.json"))
    }

    pub fn policy_curves(&self, k: usize) -> PathBuf {
        self.root.join(format!("policies/k{k}_curves.csv"))
    }

    pub fn backtest_dir(&self) -> PathBuf {
        self.root.join("backtest")
    }

    pub fn run_manifest(&self) -> PathBuf {
        self.root.join("run-manifest.json")
    }

    pub fn relative(&self, path: &Path) -> String {
        path.strip_prefix(&self.root)
            .unwrap_or(path)
            .to_string_lossy()
            .replace('\\', "/")
    }
}

/// Index of every artifact currently in the output directory.
///
/// Holds no timestamps, so identical runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Relative path to SHA-256.
    pub artifacts: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn load_or_new(layout: &Layout, config: &ExperimentConfig) -> Self {
        let fresh = || RunManifest {
            format: "hybrid-alloc/run-manifest".into(),
            version: 1,
            seed: config.seed,
            config: config.clone(),
            artifacts: BTreeMap::new(),
        };
        match io::read_json::<RunManifest>(&layout.run_manifest()) {
            // A different config or seed invalidates nothing on disk, but the
            // echo must describe the latest command.
            Ok(mut m) => {
                m.seed = config.seed;
                m.config = config.clone();
                m
            }
            Err(_) => fresh(),
        }
    }

    /// Drop entries under `prefix` (before rewriting that stage).
    pub fn forget(&mut self, prefix: &str) {
        self.artifacts.retain(|k, _| !k.starts_with(prefix));
    }

    /// Re-key entries under `from` to live under `to` (after a directory move).
    pub fn rename_prefix(&mut self, from: &str, to: &str) {
        let moved: Vec<(String, String)> = self
            .artifacts
            .iter()
            .filter(|(k, _)| k.starts_with(from))
            .map(|(k, v)| (format!("{to}{}", &k[from.len()..]), v.clone()))
            .collect();
        self.forget(from);
        self.artifacts.extend(moved);
    }

    pub fn record(&mut self, layout: &Layout, path: &Path, hash: String) {
        self.artifacts.insert(layout.relative(path), hash);
    }

    pub fn save(&self, layout: &Layout) -> Result<(), CliError> {
        io::write_json(&layout.run_manifest(), self).map_err(|e| CliError::io(&layout.run_manifest(), e))?;
        Ok(())
    }
}

/// Write bytes and note their hash in the manifest.
pub fn emit(manifest: &mut RunManifest, layout: &Layout, path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    io::write_bytes(path, bytes).map_err(|e| CliError::io(path, e))?;
    let hash = io::sha256_hex(bytes);
    manifest.record(layout, path, hash.clone());
    Ok(hash)
}

/// Move a non-empty directory aside to `<dir>.prev-<n>` with the smallest
/// unused `n`. Returns the new location.
pub fn archive_dir(dir: &Path) -> Result<Option<PathBuf>, CliError> {
    let non_empty = std::fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(false);
    if !non_empty {
        return Ok(None);
    }
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let target = (1..)
        .map(|n| dir.with_file_name(format!("{name}.prev-{n}")))
        .find(|p| !p.exists())
        .expect("unbounded search");
    std::fs::rename(dir, &target).map_err(|e| CliError::io(dir, e))?;
    Ok(Some(target))
}
