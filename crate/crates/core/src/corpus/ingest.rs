use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Deserialize;

use super::manifest::{CorpusManifest, Rejects, ShardEntry};
use super::shard::{ShardWriter, DEFAULT_SHARD_BYTES};
use super::{Document, Source};
use crate::error::{Error, Result};

/// Documents of input `i` get ids `(i << ORDINAL_BITS) | ordinal`.
const ORDINAL_BITS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One JSON object per line with a `"text"` field.
    Jsonl,
    /// Documents separated by one or more blank lines.
    PlainText,
}

impl InputFormat {
    pub fn detect(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json" | "ndjson") => InputFormat::Jsonl,
            _ => InputFormat::PlainText,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputSpec {
    pub path: PathBuf,
    pub source: Source,
    pub format: InputFormat,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>, source: Source) -> Self {
        let path = path.into();
        let format = InputFormat::detect(&path);
        InputSpec {
            path,
            source,
            format,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub out_dir: PathBuf,
    pub shard_bytes: u64,
}

impl IngestOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        IngestOptions {
            out_dir: out_dir.into(),
            shard_bytes: DEFAULT_SHARD_BYTES,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
    #[serde(default)]
    source: Option<String>,
}

struct FileResult {
    shards: Vec<ShardEntry>,
    source_bytes: std::collections::BTreeMap<Source, u64>,
    rejects: Rejects,
}

/// Streams every input into sharded JSONL under `opts.out_dir` and writes the
/// manifest there. Inputs are processed in parallel; output order is always
/// (input index, record index).
pub fn ingest(inputs: &[InputSpec], opts: &IngestOptions) -> Result<CorpusManifest> {
    if inputs.len() >= 1 << (64 - ORDINAL_BITS) {
        return Err(Error::invalid("too many input files"));
    }
    let results: Vec<FileResult> = inputs
        .par_iter()
        .enumerate()
        .map(|(index, input)| ingest_one(index, input, opts))
        .collect::<Result<_>>()?;

    let mut manifest = CorpusManifest::new(&opts.out_dir);
    for result in results {
        for shard in result.shards {
            manifest.push_shard(shard);
        }
        for (source, bytes) in result.source_bytes {
            *manifest.source_bytes.entry(source).or_default() += bytes;
        }
        manifest.rejects.absorb(&result.rejects);
    }
    if manifest.rejects.total() > 0 {
        warn!(
            "ingest rejected {} records ({} invalid UTF-8, {} malformed)",
            manifest.rejects.total(),
            manifest.rejects.invalid_utf8,
            manifest.rejects.malformed
        );
    }
    info!(
        "ingested {} documents, {} bytes into {} shards",
        manifest.document_count,
        manifest.total_bytes,
        manifest.shards.len()
    );
    manifest.save()?;
    Ok(manifest)
}

fn ingest_one(index: usize, input: &InputSpec, opts: &IngestOptions) -> Result<FileResult> {
    let file = File::open(&input.path).map_err(|e| Error::io(&input.path, e))?;
    let reader = BufReader::with_capacity(1 << 20, file);
    let mut writer = ShardWriter::new(&opts.out_dir, format!("part-{index:05}"), opts.shard_bytes)?;
    let mut rejects = Rejects::default();
    let mut ordinal: u64 = 0;
    let base = (index as u64) << ORDINAL_BITS;

    let mut emit = |text: String, source: Source, writer: &mut ShardWriter| -> Result<()> {
        let doc = Document::new(base | ordinal, source, text);
        ordinal += 1;
        writer.write(&doc)
    };

    match input.format {
        InputFormat::Jsonl => {
            for_each_line(reader, &input.path, |line| {
                if line.iter().all(u8::is_ascii_whitespace) {
                    return Ok(());
                }
                if std::str::from_utf8(line).is_err() {
                    rejects.invalid_utf8 += 1;
                    return Ok(());
                }
                match serde_json::from_slice::<JsonRecord>(line) {
                    Ok(record) => {
                        let source = match record.source.as_deref().map(str::parse::<Source>) {
                            Some(Ok(s)) => s,
                            _ => input.source,
                        };
                        emit(record.text, source, &mut writer)
                    }
                    Err(_) => {
                        rejects.malformed += 1;
                        Ok(())
                    }
                }
            })?;
        }
        InputFormat::PlainText => {
            let mut block: Vec<u8> = Vec::new();
            let mut flush = |block: &mut Vec<u8>,
                             rejects: &mut Rejects,
                             writer: &mut ShardWriter|
             -> Result<()> {
                if block.is_empty() {
                    return Ok(());
                }
                if block.last() == Some(&b'\n') {
                    block.pop();
                }
                let bytes = std::mem::take(block);
                match String::from_utf8(bytes) {
                    Ok(text) => emit(text, input.source, writer),
                    Err(_) => {
                        rejects.invalid_utf8 += 1;
                        Ok(())
                    }
                }
            };
            for_each_line(reader, &input.path, |line| {
                let mut content = line;
                while let Some((&last, rest)) = content.split_last() {
                    if last == b'\n' || last == b'\r' {
                        content = rest;
                    } else {
                        break;
                    }
                }
                if content.iter().all(u8::is_ascii_whitespace) {
                    flush(&mut block, &mut rejects, &mut writer)
                } else {
                    block.extend_from_slice(content);
                    block.push(b'\n');
                    Ok(())
                }
            })?;
            flush(&mut block, &mut rejects, &mut writer)?;
        }
    }

    let (shards, source_bytes) = writer.finish()?;
    Ok(FileResult {
        shards,
        source_bytes,
        rejects,
    })
}

fn for_each_line<R: BufRead>(
    mut reader: R,
    path: &Path,
    mut f: impl FnMut(&[u8]) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let n = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            return Ok(());
        }
        f(&buf)?;
    }
}
