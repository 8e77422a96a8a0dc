//! Streaming corpus preparation: ingest, exact dedup, shuffle and byte-budget
//! sampling over sharded JSONL.
//!
//! Each operation comes in two forms: a pure in-memory function over
//! `&[Document]` and a manifest-to-manifest form that streams shards on disk.
//! Both share the same dedup key and permutation, so they agree exactly.

mod ingest;
mod manifest;
mod ops;
mod shard;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use ingest::{ingest, InputFormat, InputSpec, IngestOptions};
pub use manifest::{CorpusManifest, Rejects, ShardEntry, MANIFEST_FILE};
pub use ops::{
    dedup_documents, dedup_exact, dedup_key, sample_bytes, sample_documents, shuffle,
    shuffle_documents, DedupOutcome, SampleOutcome,
};
pub use shard::{read_documents, ShardReader, ShardWriter, DEFAULT_SHARD_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    WebCorpus,
    Wikipedia,
    Other,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::WebCorpus => "web_corpus",
            Source::Wikipedia => "wikipedia",
            Source::Other => "other",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "web_corpus" | "web" => Ok(Source::WebCorpus),
            "wikipedia" | "wiki" => Ok(Source::Wikipedia),
            "other" => Ok(Source::Other),
            _ => Err(Error::invalid(format!("unknown source tag {s:?}"))),
        }
    }
}

/// One corpus unit. `id` is assigned at ingest from the record's position,
/// never from its content.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Document {
    pub id: u64,
    pub source: Source,
    pub text: String,
}

impl Document {
    pub fn new(id: u64, source: Source, text: impl Into<String>) -> Self {
        Document {
            id,
            source,
            text: text.into(),
        }
    }

    pub fn byte_len(&self) -> u64 {
        self.text.len() as u64
    }
}
