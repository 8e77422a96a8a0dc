use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use xxhash_rust::xxh3::xxh3_128;

use super::manifest::CorpusManifest;
use super::shard::{ShardReader, ShardWriter};
use super::{Document, Source};
use crate::error::{Error, Result};
use crate::rng;

/// Dedup fingerprint: 128-bit hash of the text with trailing whitespace trimmed.
pub fn dedup_key(text: &str) -> u128 {
    xxh3_128(text.trim_end().as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DedupOutcome {
    pub documents: Vec<Document>,
    pub fingerprint_count: u64,
}

/// Keeps the first document of every distinct normalized text.
pub fn dedup_documents(docs: &[Document]) -> DedupOutcome {
    let keys: Vec<u128> = docs.par_iter().map(|d| dedup_key(&d.text)).collect();
    let mut seen = HashSet::with_capacity(docs.len());
    let documents = docs
        .iter()
        .zip(keys)
        .filter(|(_, key)| seen.insert(*key))
        .map(|(doc, _)| doc.clone())
        .collect();
    DedupOutcome {
        documents,
        fingerprint_count: seen.len() as u64,
    }
}

/// Whole-document seeded Fisher–Yates permutation.
pub fn shuffle_documents(docs: &[Document], seed: u64) -> Vec<Document> {
    rng::permutation(docs.len(), seed)
        .into_iter()
        .map(|i| docs[i].clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    pub documents: Vec<Document>,
    pub bytes: u64,
    pub undersized: bool,
}

/// Draws documents in shuffled order until their byte total first reaches
/// `target_bytes`.
pub fn sample_documents(docs: &[Document], target_bytes: u64, seed: u64) -> Result<SampleOutcome> {
    let sizes: Vec<u64> = docs.iter().map(Document::byte_len).collect();
    let (picked, bytes, undersized) = pick_prefix(&sizes, target_bytes, seed)?;
    Ok(SampleOutcome {
        documents: picked.into_iter().map(|i| docs[i].clone()).collect(),
        bytes,
        undersized,
    })
}

fn pick_prefix(sizes: &[u64], target_bytes: u64, seed: u64) -> Result<(Vec<usize>, u64, bool)> {
    if target_bytes == 0 {
        return Err(Error::invalid("target_bytes must be positive"));
    }
    let order = rng::permutation(sizes.len(), seed);
    let mut picked = Vec::new();
    let mut bytes = 0u64;
    for i in order {
        if bytes >= target_bytes {
            break;
        }
        bytes += sizes[i];
        picked.push(i);
    }
    let undersized = bytes < target_bytes;
    Ok((picked, bytes, undersized))
}

/// Streams `manifest` into `out_dir`, dropping repeated texts. Shards are
/// fingerprinted in parallel and filtered in shard order.
pub fn dedup_exact(manifest: &CorpusManifest, out_dir: &Path, shard_bytes: u64) -> Result<CorpusManifest> {
    ensure_distinct(manifest, out_dir)?;
    let mut writer = ShardWriter::new(out_dir, "dedup", shard_bytes)?;
    let mut seen: HashSet<u128> = HashSet::new();
    let mut dropped = 0u64;
    for path in manifest.shard_paths() {
        let docs: Vec<Document> = ShardReader::open(&path)?.collect::<Result<_>>()?;
        let keys: Vec<u128> = docs.par_iter().map(|d| dedup_key(&d.text)).collect();
        for (doc, key) in docs.iter().zip(keys) {
            if seen.insert(key) {
                writer.write(doc)?;
            } else {
                dropped += 1;
            }
        }
    }
    let mut out = finish(manifest, out_dir, writer)?;
    out.dedup_fingerprint_count = seen.len() as u64;
    info!(
        "dedup kept {} of {} documents ({dropped} duplicates)",
        out.document_count, manifest.document_count
    );
    out.save()?;
    Ok(out)
}

/// Rewrites `manifest` into `out_dir` in a seeded whole-document order.
pub fn shuffle(manifest: &CorpusManifest, out_dir: &Path, seed: u64, shard_bytes: u64) -> Result<CorpusManifest> {
    ensure_distinct(manifest, out_dir)?;
    let index = DocumentIndex::build(manifest)?;
    let order = rng::permutation(index.entries.len(), seed);
    let writer = index.copy_in_order(&order, out_dir, "shuffled", shard_bytes)?;
    let mut out = finish(manifest, out_dir, writer)?;
    out.shuffle_seed = Some(seed);
    out.save()?;
    Ok(out)
}

/// Byte-budget sample drawn from a seeded global shuffle of `manifest`.
pub fn sample_bytes(
    manifest: &CorpusManifest,
    out_dir: &Path,
    target_bytes: u64,
    seed: u64,
    shard_bytes: u64,
) -> Result<CorpusManifest> {
    ensure_distinct(manifest, out_dir)?;
    let index = DocumentIndex::build(manifest)?;
    let sizes: Vec<u64> = index.entries.iter().map(|e| e.text_bytes).collect();
    let (picked, bytes, undersized) = pick_prefix(&sizes, target_bytes, seed)?;
    let writer = index.copy_in_order(&picked, out_dir, "sample", shard_bytes)?;
    let mut out = finish(manifest, out_dir, writer)?;
    out.shuffle_seed = Some(seed);
    out.undersized = undersized;
    info!(
        "sampled {} documents, {bytes} bytes (target {target_bytes}){}",
        out.document_count,
        if undersized { ", corpus undersized" } else { "" }
    );
    out.save()?;
    Ok(out)
}

fn ensure_distinct(manifest: &CorpusManifest, out_dir: &Path) -> Result<()> {
    let same = match (manifest.root().canonicalize(), out_dir.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(Error::invalid(
            "output directory must differ from the input manifest directory",
        ));
    }
    Ok(())
}

fn finish(parent: &CorpusManifest, out_dir: &Path, writer: ShardWriter) -> Result<CorpusManifest> {
    let (shards, source_bytes) = writer.finish()?;
    let mut out = CorpusManifest::new(out_dir);
    out.inherit(parent);
    for shard in shards {
        out.push_shard(shard);
    }
    out.source_bytes = source_bytes;
    Ok(out)
}

struct IndexEntry {
    shard: u32,
    offset: u64,
    line_len: u64,
    text_bytes: u64,
    source: Source,
}

/// Location of every document across a manifest's shards.
struct DocumentIndex {
    shard_paths: Vec<PathBuf>,
    entries: Vec<IndexEntry>,
}

impl DocumentIndex {
    fn build(manifest: &CorpusManifest) -> Result<Self> {
        let shard_paths: Vec<PathBuf> = manifest.shard_paths().collect();
        let per_shard: Vec<Vec<IndexEntry>> = shard_paths
            .par_iter()
            .enumerate()
            .map(|(shard, path)| {
                let mut entries = Vec::new();
                let mut reader = ShardReader::open(path)?;
                while let Some(item) = reader.next_located() {
                    let (offset, line_len, doc) = item?;
                    entries.push(IndexEntry {
                        shard: shard as u32,
                        offset,
                        line_len,
                        text_bytes: doc.byte_len(),
                        source: doc.source,
                    });
                }
                Ok(entries)
            })
            .collect::<Result<_>>()?;
        Ok(DocumentIndex {
            shard_paths,
            entries: per_shard.into_iter().flatten().collect(),
        })
    }

    fn copy_in_order(&self, order: &[usize], out_dir: &Path, prefix: &str, shard_bytes: u64) -> Result<ShardWriter> {
        let mut files: Vec<Option<File>> = (0..self.shard_paths.len()).map(|_| None).collect();
        let mut writer = ShardWriter::new(out_dir, prefix, shard_bytes)?;
        let mut line = Vec::new();
        for &i in order {
            let entry = &self.entries[i];
            let path = &self.shard_paths[entry.shard as usize];
            let slot = &mut files[entry.shard as usize];
            if slot.is_none() {
                *slot = Some(File::open(path).map_err(|e| Error::io(path, e))?);
            }
            let file = slot.as_mut().expect("opened");
            line.resize(entry.line_len as usize, 0);
            file.seek(SeekFrom::Start(entry.offset))
                .and_then(|_| file.read_exact(&mut line))
                .map_err(|e| Error::io(path, e))?;
            if line.last() != Some(&b'\n') {
                line.push(b'\n');
            }
            writer.write_raw(&line, entry.source, entry.text_bytes)?;
        }
        Ok(writer)
    }
}
