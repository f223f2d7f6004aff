use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::prices::parse_price_csv;
use super::DataError;
use crate::io;

/// Sidecar written next to every fetched file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchProvenance {
    pub url: String,
    pub fetched_at: String,
    pub sha256: String,
}

pub fn provenance_path(dest: &Path) -> PathBuf {
    let mut name = dest.file_name().unwrap_or_default().to_os_string();
    name.push(".provenance.json");
    dest.with_file_name(name)
}

/// Fetch `url` into `dest` unless a cached copy with a provenance sidecar
/// already exists. The body must parse as a `date,close` CSV; after caching
/// the file is read exactly like any local input.
pub fn fetch_to_cache(url: &str, dest: &Path) -> Result<FetchProvenance, DataError> {
    fetch_with(url, dest, http_get)
}

pub(crate) fn fetch_with(
    url: &str,
    dest: &Path,
    get: impl FnOnce(&str) -> Result<Vec<u8>, String>,
) -> Result<FetchProvenance, DataError> {
    let sidecar = provenance_path(dest);
    if dest.exists() && sidecar.exists() {
        if let Ok(p) = io::read_json::<FetchProvenance>(&sidecar) {
            if p.url == url {
                return Ok(p);
            }
        }
    }
    let body = get(url).map_err(|message| DataError::Fetch {
        url: url.to_string(),
        message,
    })?;
    let text = String::from_utf8(body).map_err(|e| DataError::Fetch {
        url: url.to_string(),
        message: e.to_string(),
    })?;
    parse_price_csv(&text, dest)?;
    let io_err = |source| DataError::Io {
        path: dest.to_path_buf(),
        source,
    };
    io::write_bytes(dest, text.as_bytes()).map_err(io_err)?;
    let provenance = FetchProvenance {
        url: url.to_string(),
        fetched_at: chrono::Utc::now().to_rfc3339(),
        sha256: io::sha256_hex(text.as_bytes()),
    };
    io::write_json(&sidecar, &provenance).map_err(|source| DataError::Io {
        path: sidecar.clone(),
        source,
    })?;
    log::info!("fetched {url} -> {}", dest.display());
    Ok(provenance)
}

#[cfg(feature = "http")]
fn http_get(url: &str) -> Result<Vec<u8>, String> {
    let mut resp = ureq::get(url).call().map_err(|e| e.to_string())?;
    resp.body_mut().read_to_vec().map_err(|e| e.to_string())
}

#[cfg(not(feature = "http"))]
fn http_get(_url: &str) -> Result<Vec<u8>, String> {
    Err("built without the `http` feature".to_string())
}
