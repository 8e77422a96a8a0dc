use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Source;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

const LANGUAGE_FILTER_NOTE: &str =
    "language identification and quality filtering are not applied; inputs are consumed as given";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub document_count: u64,
    pub byte_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejects {
    pub invalid_utf8: u64,
    pub malformed: u64,
}

impl Rejects {
    pub fn total(&self) -> u64 {
        self.invalid_utf8 + self.malformed
    }

    pub(crate) fn absorb(&mut self, other: &Rejects) {
        self.invalid_utf8 += other.invalid_utf8;
        self.malformed += other.malformed;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub shards: Vec<ShardEntry>,
    pub total_bytes: u64,
    pub document_count: u64,
    pub source_bytes: BTreeMap<Source, u64>,
    pub dedup_fingerprint_count: u64,
    pub shuffle_seed: Option<u64>,
    pub rejects: Rejects,
    pub undersized: bool,
    pub notes: Vec<String>,
    #[serde(skip)]
    root: PathBuf,
}

impl CorpusManifest {
    pub(crate) fn new(root: impl Into<PathBuf>) -> Self {
        CorpusManifest {
            shards: Vec::new(),
            total_bytes: 0,
            document_count: 0,
            source_bytes: BTreeMap::new(),
            dedup_fingerprint_count: 0,
            shuffle_seed: None,
            rejects: Rejects::default(),
            undersized: false,
            notes: vec![LANGUAGE_FILTER_NOTE.to_string()],
            root: root.into(),
        }
    }

    /// Directory the shard paths are relative to.
    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn shard_paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.shards.iter().map(|s| self.root.join(&s.path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let path = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let raw = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let mut manifest: CorpusManifest =
            serde_json::from_slice(&raw).map_err(|e| Error::json(&path, e))?;
        manifest.root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        manifest.validate()?;
        Ok(manifest)
    }

    /// Writes `manifest.json` into [`Self::root`].
    pub fn save(&self) -> Result<PathBuf> {
        let path = self.root.join(MANIFEST_FILE);
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| Error::json(&path, e))?;
        json.push(b'\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        let bytes: u64 = self.shards.iter().map(|s| s.byte_count).sum();
        let docs: u64 = self.shards.iter().map(|s| s.document_count).sum();
        if bytes != self.total_bytes {
            return Err(Error::invalid(format!(
                "manifest total_bytes {} != shard sum {}",
                self.total_bytes, bytes
            )));
        }
        if docs != self.document_count {
            return Err(Error::invalid(format!(
                "manifest document_count {} != shard sum {}",
                self.document_count, docs
            )));
        }
        Ok(())
    }

    pub(crate) fn push_shard(&mut self, entry: ShardEntry) {
        self.total_bytes += entry.byte_count;
        self.document_count += entry.document_count;
        self.shards.push(entry);
    }

    /// Copies provenance fields from `parent` into a derived manifest.
    pub(crate) fn inherit(&mut self, parent: &CorpusManifest) {
        self.rejects = parent.rejects.clone();
        self.dedup_fingerprint_count = parent.dedup_fingerprint_count;
        self.shuffle_seed = parent.shuffle_seed;
        self.notes = parent.notes.clone();
    }
}
