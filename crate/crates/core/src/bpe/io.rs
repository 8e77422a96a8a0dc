//! On-disk tokenizer layout: `vocab.json`, `merges.txt`, `metadata.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::model::{Merge, MergeTable, SpecialTokens, Tokenizer, Vocabulary, BYTE_OFFSET};
use super::presplit::PRESPLIT_VERSION;
use crate::error::{Error, Result};

pub const VOCAB_FILE: &str = "vocab.json";
pub const MERGES_FILE: &str = "merges.txt";
pub const METADATA_FILE: &str = "metadata.json";
pub const MERGES_HEADER: &str = "#version: 0.2";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerMetadata {
    pub vocab_size: usize,
    pub merges: usize,
    pub specials: SpecialTokens,
    pub presplitter: String,
    pub corpus_fingerprint: Option<String>,
    pub target_vocab_size: Option<usize>,
    pub min_pair_frequency: Option<u64>,
    pub reached_target: Option<bool>,
}

impl TokenizerMetadata {
    pub fn describe(tokenizer: &Tokenizer) -> Self {
        TokenizerMetadata {
            vocab_size: tokenizer.vocab_size(),
            merges: tokenizer.merges().len(),
            specials: tokenizer.vocab().specials().clone(),
            presplitter: PRESPLIT_VERSION.to_string(),
            corpus_fingerprint: None,
            target_vocab_size: None,
            min_pair_frequency: None,
            reached_target: None,
        }
    }
}

pub fn save(tokenizer: &Tokenizer, metadata: &TokenizerMetadata, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut map = serde_json::Map::new();
    for (id, token) in tokenizer.vocab().iter() {
        map.insert(token.to_string(), serde_json::Value::from(id));
    }
    write_json(&dir.join(VOCAB_FILE), &serde_json::Value::Object(map))?;

    let vocab = tokenizer.vocab();
    let mut merges = String::with_capacity(tokenizer.merges().len() * 12);
    merges.push_str(MERGES_HEADER);
    merges.push('\n');
    for m in tokenizer.merges().iter() {
        merges.push_str(vocab.token(m.left).expect("left token"));
        merges.push(' ');
        merges.push_str(vocab.token(m.right).expect("right token"));
        merges.push('\n');
    }
    let path = dir.join(MERGES_FILE);
    fs::write(&path, merges).map_err(|e| Error::io(&path, e))?;

    write_json(&dir.join(METADATA_FILE), metadata)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::json(path, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read(path: PathBuf) -> Result<(PathBuf, String)> {
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok((path, text))
}

/// Loads a tokenizer directory; malformed merges report their line number.
pub fn load(dir: &Path) -> Result<(Tokenizer, Option<TokenizerMetadata>)> {
    let (vocab_path, vocab_text) = read(dir.join(VOCAB_FILE))?;
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&vocab_text).map_err(|e| Error::json(&vocab_path, e))?;
    let mut by_id: Vec<Option<String>> = vec![None; map.len()];
    for (token, id) in map {
        let id = id
            .as_u64()
            .filter(|&id| (id as usize) < by_id.len())
            .ok_or_else(|| Error::parse(&vocab_path, 0, format!("token {token:?} has invalid id {id}")))?;
        if by_id[id as usize].replace(token.clone()).is_some() {
            return Err(Error::parse(&vocab_path, 0, format!("id {id} assigned twice")));
        }
    }
    let tokens: Vec<String> = by_id
        .into_iter()
        .enumerate()
        .map(|(id, t)| t.ok_or_else(|| Error::parse(&vocab_path, 0, format!("id {id} missing"))))
        .collect::<Result<_>>()?;

    let metadata_path = dir.join(METADATA_FILE);
    let metadata: Option<TokenizerMetadata> = if metadata_path.exists() {
        let (path, text) = read(metadata_path)?;
        Some(serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?)
    } else {
        None
    };
    let specials = metadata.as_ref().map(|m| m.specials.clone()).unwrap_or_default();

    let mut vocab = Vocabulary::base(specials);
    if tokens.len() < vocab.len() || tokens[..vocab.len()].iter().zip(vocab.iter()).any(|(a, (_, b))| a != b) {
        return Err(Error::parse(
            &vocab_path,
            0,
            "vocabulary does not start with the special tokens and byte symbols",
        ));
    }

    let (merges_path, merges_text) = read(dir.join(MERGES_FILE))?;
    let mut lines = merges_text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.starts_with("#version") => {}
        _ => return Err(Error::parse(&merges_path, 1, "missing version header")),
    }
    let mut table = MergeTable::default();
    for (index, line) in lines {
        let lineno = index + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let (left, right) = match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => {
                return Err(Error::parse(
                    &merges_path,
                    lineno,
                    format!("expected \"left right\", found {line:?}"),
                ))
            }
        };
        let lookup = |vocab: &Vocabulary, tok: &str| {
            vocab.id(tok).filter(|&id| id >= BYTE_OFFSET).ok_or_else(|| {
                Error::parse(&merges_path, lineno, format!("token {tok:?} used before it is defined"))
            })
        };
        let l = lookup(&vocab, left)?;
        let r = lookup(&vocab, right)?;
        let merged = format!("{left}{right}");
        let result = vocab
            .intern(&merged)
            .map_err(|e| Error::parse(&merges_path, lineno, e.to_string()))?;
        table
            .push(Merge { left: l, right: r, result })
            .map_err(|e| Error::parse(&merges_path, lineno, e.to_string()))?;
        if tokens.get(result as usize).map(String::as_str) != Some(merged.as_str()) {
            return Err(Error::parse(
                &merges_path,
                lineno,
                format!("merge result {merged:?} disagrees with {VOCAB_FILE}"),
            ));
        }
    }
    if vocab.len() != tokens.len() {
        return Err(Error::parse(
            &merges_path,
            merges_text.lines().count(),
            format!(
                "merges define {} tokens but {VOCAB_FILE} has {} (truncated file?)",
                vocab.len(),
                tokens.len()
            ),
        ));
    }
    Ok((Tokenizer::new(vocab, table), metadata))
}
