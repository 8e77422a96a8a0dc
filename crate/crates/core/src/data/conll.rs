use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{bio_violations, repair_bio, BioTag, BioViolation};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<BioTag>,
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, tags: Vec<BioTag>) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::LengthMismatch {
                what: "tokens and tags",
                left: tokens.len(),
                right: tags.len(),
            });
        }
        Ok(TaggedSentence { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllLoad {
    pub sentences: Vec<TaggedSentence>,
    /// Violations found in the file as read (before any repair).
    pub violations: Vec<BioViolation>,
    pub repaired: usize,
}

/// Reads blank-line-separated `token tag` lines. Lines must have exactly two
/// whitespace-separated columns; `-DOCSTART-` markers are skipped.
pub fn load_conll(path: &Path, repair: bool) -> Result<ConllLoad> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = ConllLoad::default();
    let mut tokens = Vec::new();
    let mut tags = Vec::new();

    let close = |tokens: &mut Vec<String>, tags: &mut Vec<BioTag>, out: &mut ConllLoad| {
        if tokens.is_empty() {
            return;
        }
        let index = out.sentences.len();
        out.violations.extend(bio_violations(index, tags));
        if repair {
            out.repaired += repair_bio(tags);
        }
        out.sentences.push(TaggedSentence {
            tokens: std::mem::take(tokens),
            tags: std::mem::take(tags),
        });
    };

    for (index, line) in raw.lines().enumerate() {
        let lineno = index + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            close(&mut tokens, &mut tags, &mut out);
            continue;
        }
        if line.starts_with("-DOCSTART-") {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 2 columns (token, tag), found {}", cols.len()),
            ));
        }
        let tag: BioTag = cols[1]
            .parse()
            .map_err(|e: Error| Error::parse(path, lineno, e.to_string()))?;
        tokens.push(cols[0].to_string());
        tags.push(tag);
    }
    close(&mut tokens, &mut tags, &mut out);
    Ok(out)
}

pub fn save_conll(path: &Path, sentences: &[TaggedSentence]) -> Result<()> {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            out.push_str(tok);
            out.push('\t');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
