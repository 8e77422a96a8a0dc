use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::manifest::ShardEntry;
use super::{Document, Source};
use crate::error::{Error, Result};

pub const DEFAULT_SHARD_BYTES: u64 = 512 * 1024 * 1024;

/// Writes documents as JSONL, rolling over to a new file once the current
/// one reaches `shard_bytes` on disk.
pub struct ShardWriter {
    dir: PathBuf,
    prefix: String,
    shard_bytes: u64,
    next_index: usize,
    current: Option<OpenShard>,
    finished: Vec<ShardEntry>,
    source_bytes: BTreeMap<Source, u64>,
}

struct OpenShard {
    name: PathBuf,
    out: BufWriter<File>,
    file_bytes: u64,
    entry: ShardEntry,
}

impl ShardWriter {
    pub fn new(dir: impl Into<PathBuf>, prefix: impl Into<String>, shard_bytes: u64) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ShardWriter {
            dir,
            prefix: prefix.into(),
            shard_bytes: shard_bytes.max(1),
            next_index: 0,
            current: None,
            finished: Vec::new(),
            source_bytes: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, doc: &Document) -> Result<()> {
        let mut line = serde_json::to_vec(doc).map_err(|e| Error::json(&self.dir, e))?;
        line.push(b'\n');
        self.write_raw(&line, doc.source, doc.byte_len())
    }

    /// Writes an already serialized JSONL line (including its newline).
    pub(crate) fn write_raw(&mut self, line: &[u8], source: Source, text_bytes: u64) -> Result<()> {
        if self.current.is_none() {
            self.open_next()?;
        }
        let shard = self.current.as_mut().expect("shard open");
        let path = self.dir.join(&shard.name);
        shard.out.write_all(line).map_err(|e| Error::io(&path, e))?;
        shard.file_bytes += line.len() as u64;
        shard.entry.document_count += 1;
        shard.entry.byte_count += text_bytes;
        *self.source_bytes.entry(source).or_default() += text_bytes;
        if shard.file_bytes >= self.shard_bytes {
            self.close_current()?;
        }
        Ok(())
    }

    fn open_next(&mut self) -> Result<()> {
        let name = PathBuf::from(format!("{}-{:05}.jsonl", self.prefix, self.next_index));
        self.next_index += 1;
        let path = self.dir.join(&name);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.current = Some(OpenShard {
            entry: ShardEntry {
                path: name.clone(),
                document_count: 0,
                byte_count: 0,
            },
            name,
            out: BufWriter::new(file),
            file_bytes: 0,
        });
        Ok(())
    }

    fn close_current(&mut self) -> Result<()> {
        if let Some(mut shard) = self.current.take() {
            let path = self.dir.join(&shard.name);
            shard.out.flush().map_err(|e| Error::io(&path, e))?;
            self.finished.push(shard.entry);
        }
        Ok(())
    }

    /// Flushes and returns the shard entries in write order.
    pub fn finish(mut self) -> Result<(Vec<ShardEntry>, BTreeMap<Source, u64>)> {
        self.close_current()?;
        Ok((self.finished, self.source_bytes))
    }
}

/// Streams documents out of one JSONL shard written by [`ShardWriter`].
pub struct ShardReader {
    path: PathBuf,
    inner: BufReader<File>,
    line: usize,
    offset: u64,
    buf: Vec<u8>,
}

impl ShardReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(ShardReader {
            path,
            inner: BufReader::with_capacity(1 << 20, file),
            line: 0,
            offset: 0,
            buf: Vec::new(),
        })
    }

    /// Next document with the byte offset and length of its line.
    pub(crate) fn next_located(&mut self) -> Option<Result<(u64, u64, Document)>> {
        loop {
            self.buf.clear();
            let offset = self.offset;
            match self.inner.read_until(b'\n', &mut self.buf) {
                Ok(0) => return None,
                Ok(n) => self.offset += n as u64,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            }
            self.line += 1;
            if self.buf.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            return Some(
                serde_json::from_slice::<Document>(&self.buf)
                    .map(|doc| (offset, self.buf.len() as u64, doc))
                    .map_err(|e| Error::parse(&self.path, self.line, e.to_string())),
            );
        }
    }
}

impl Iterator for ShardReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_located().map(|r| r.map(|(_, _, doc)| doc))
    }
}

/// Reads every document of the given shards, in order.
pub fn read_documents<I, P>(paths: I) -> Result<Vec<Document>>
where
    I: IntoIterator<Item = P>,
    P: AsRef<Path>,
{
    let mut docs = Vec::new();
    for path in paths {
        for doc in ShardReader::open(path)? {
            docs.push(doc?);
        }
    }
    Ok(docs)
}
