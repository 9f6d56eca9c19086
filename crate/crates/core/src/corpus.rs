//! Line-oriented JSON corpus manifests and asset verification.

use std::collections::HashSet;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub html_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_html_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_screenshot_path: Option<String>,
    #[serde(default)]
    pub asset_paths: Vec<String>,
}

impl ManifestEntry {
    pub fn new(doc_id: impl Into<String>, html_path: impl Into<String>) -> Self {
        ManifestEntry {
            doc_id: doc_id.into(),
            html_path: html_path.into(),
            screenshot_path: None,
            ground_truth_html_path: None,
            ground_truth_screenshot_path: None,
            asset_paths: Vec::new(),
        }
    }

    /// Every path the entry references, html first.
    pub fn referenced_paths(&self) -> Vec<&str> {
        let mut out = vec![self.html_path.as_str()];
        out.extend(self.screenshot_path.as_deref());
        out.extend(self.ground_truth_html_path.as_deref());
        out.extend(self.ground_truth_screenshot_path.as_deref());
        out.extend(self.asset_paths.iter().map(String::as_str));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    /// Directory that entry paths are relative to.
    pub base_dir: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

fn is_relative_path(p: &str) -> bool {
    let path = Path::new(p);
    !p.is_empty()
        && !path.is_absolute()
        && !p.starts_with('/')
        && !path
            .components()
            .any(|c| matches!(c, Component::Prefix(_) | Component::RootDir))
}

impl CorpusManifest {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, CorpusError> {
        let mut entries: Vec<ManifestEntry> = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CorpusError::ManifestParse {
                line: i + 1,
                message,
            };
            let entry: ManifestEntry =
                serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if entry.doc_id.trim().is_empty() {
                return Err(err("empty doc_id".into()));
            }
            if !seen.insert(entry.doc_id.clone()) {
                return Err(err(format!("duplicate doc_id {:?}", entry.doc_id)));
            }
            if let Some(bad) = entry
                .referenced_paths()
                .into_iter()
                .find(|p| !is_relative_path(p))
            {
                return Err(err(format!(
                    "path {bad:?} must be relative to the manifest directory"
                )));
            }
            entries.push(entry);
        }
        Ok(CorpusManifest {
            base_dir: base_dir.into(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingAssets {
    pub doc_id: String,
    pub missing: Vec<String>,
    /// Entries with missing assets are dropped from evaluation.
    pub excludable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetReport {
    pub checked: usize,
    pub entries: Vec<MissingAssets>,
}

impl AssetReport {
    pub fn is_clean(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn excluded_ids(&self) -> HashSet<&str> {
        self.entries.iter().map(|e| e.doc_id.as_str()).collect()
    }
}

/// Lists every referenced path that does not exist on disk.
pub fn verify_assets(manifest: &CorpusManifest) -> AssetReport {
    let entries = manifest
        .entries
        .iter()
        .filter_map(|e| {
            let missing: Vec<String> = e
                .referenced_paths()
                .into_iter()
                .filter(|p| !manifest.resolve(p).exists())
                .map(str::to_string)
                .collect();
            (!missing.is_empty()).then(|| MissingAssets {
                doc_id: e.doc_id.clone(),
                missing,
                excludable: true,
            })
        })
        .collect();
    AssetReport {
        checked: manifest.entries.len(),
        entries,
    }
}
