use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DataError;

/// Data manifest: which assets to load and where their `date,close` CSVs live.
///
/// ```json
/// { "assets": [ { "id": "BTC", "path": "btc.csv", "class": "crypto" } ] }
/// ```
///
/// Relative paths resolve against the manifest's directory. An entry with a
/// `url` is fetched over HTTP (when the `http` feature is enabled) into
/// `path` on first use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub assets: Vec<AssetEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    pub id: String,
    pub path: PathBuf,
    #[serde(default)]
    pub class: Option<String>,
    #[serde(default)]
    pub url: Option<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        let bytes = std::fs::read(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| DataError::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate(path)?;
        Ok(manifest)
    }

    fn validate(&self, path: &Path) -> Result<(), DataError> {
        let bad = |message: String| DataError::Manifest {
            path: path.to_path_buf(),
            message,
        };
        if self.assets.is_empty() {
            return Err(bad("no assets listed".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &self.assets {
            if a.id.is_empty() || a.id.contains(',') {
                return Err(bad(format!("invalid asset id `{}`", a.id)));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(bad(format!("duplicate asset id `{}`", a.id)));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &AssetEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn ids(&self) -> Vec<String> {
        self.assets.iter().map(|a| a.id.clone()).collect()
    }

    /// Asset class tag per asset, `"other"` when absent.
    pub fn classes(&self) -> Vec<String> {
        self.assets
            .iter()
            .map(|a| a.class.clone().unwrap_or_else(|| "other".to_string()))
            .collect()
    }
}
