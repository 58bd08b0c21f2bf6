//! Record persistence: per-record CSV, bulk binary, and dataset manifests.

mod bin;
mod csv;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use self::bin::{read_record_bin, write_record_bin, BinWriter, BIN_HEADER_LEN, BIN_MAGIC, BIN_VERSION};
pub use self::csv::{format_sig6, read_record_csv, write_record_csv, CSV_HEADER};

use crate::config::OutputFormat;
use crate::error::{Error, Result};
use crate::record::{Label, MultiLeadRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub label: Label,
    pub seed: u64,
    /// Relative to the manifest's directory.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config_digest: String,
    pub format: OutputFormat,
    pub records: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_str(&text)?;
        let mut ids: Vec<&str> = m.records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Format("manifest contains duplicate record ids".into()));
        }
        Ok(m)
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every record in `dir`.
///
/// Uses `manifest.json` when present (labels and seeds come from it), else a
/// `records.bin`, else every `*.csv` file in name order.
pub fn load_records(dir: &Path) -> Result<Vec<MultiLeadRecord>> {
    let manifest_path = dir.join(crate::pipeline::MANIFEST_FILE);
    if manifest_path.exists() {
        let manifest = DatasetManifest::load(&manifest_path)?;
        return match manifest.format {
            OutputFormat::Bin => {
                if manifest.records.is_empty() {
                    return Ok(Vec::new());
                }
                let records = read_record_bin(&dir.join(crate::pipeline::BIN_FILE))?;
                if records.len() != manifest.records.len() {
                    return Err(Error::Length {
                        expected: manifest.records.len() as u64,
                        actual: records.len() as u64,
                    });
                }
                Ok(records
                    .into_iter()
                    .map(|mut r| {
                        r.provenance.config_digest = Some(manifest.config_digest.clone());
                        r
                    })
                    .collect())
            }
            OutputFormat::Csv => manifest
                .records
                .iter()
                .map(|e| {
                    let mut rec = read_record_csv(&dir.join(&e.path))?;
                    rec.label = Some(e.label);
                    rec.seed = e.seed;
                    rec.provenance = crate::record::Provenance::synthetic(Some(manifest.config_digest.clone()));
                    Ok(rec)
                })
                .collect(),
        };
    }
    let bin_path = dir.join(crate::pipeline::BIN_FILE);
    if bin_path.exists() {
        return read_record_bin(&bin_path);
    }
    csv_files(dir)?.iter().map(|p| read_record_csv(p)).collect()
}
