use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::alphabet::ByteAlphabet;
use super::presplit;
use crate::error::{Error, Result};

/// Reserved tokens, always the first ids of a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialTokens {
    pub bos: String,
    pub pad: String,
    pub eos: String,
    pub unk: String,
    pub mask: String,
}

impl Default for SpecialTokens {
    fn default() -> Self {
        SpecialTokens {
            bos: "<s>".into(),
            pad: "<pad>".into(),
            eos: "</s>".into(),
            unk: "<unk>".into(),
            mask: "<mask>".into(),
        }
    }
}

impl SpecialTokens {
    pub const COUNT: usize = 5;

    /// In id order.
    pub fn as_array(&self) -> [&str; Self::COUNT] {
        [&self.bos, &self.pad, &self.eos, &self.unk, &self.mask]
    }
}

/// Ids of the special tokens in a [`Vocabulary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialIds {
    pub bos: u32,
    pub pad: u32,
    pub eos: u32,
    pub unk: u32,
    pub mask: u32,
}

impl SpecialIds {
    pub fn contains(&self, id: u32) -> bool {
        id == self.bos || id == self.pad || id == self.eos || id == self.unk || id == self.mask
    }
}

pub const SPECIAL_IDS: SpecialIds = SpecialIds {
    bos: 0,
    pad: 1,
    eos: 2,
    unk: 3,
    mask: 4,
};

/// First id of the 256 byte symbols.
pub const BYTE_OFFSET: u32 = SpecialTokens::COUNT as u32;

/// token string <-> dense id; strings of learned tokens are in the byte alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    bytes: Vec<Vec<u8>>,
    token_to_id: HashMap<String, u32>,
    specials: SpecialTokens,
}

impl Vocabulary {
    /// Specials followed by the 256 byte symbols.
    pub fn base(specials: SpecialTokens) -> Self {
        let alphabet = ByteAlphabet::get();
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            bytes: Vec::new(),
            token_to_id: HashMap::new(),
            specials: specials.clone(),
        };
        for s in specials.as_array() {
            vocab.push(s.to_string(), Vec::new());
        }
        for b in 0..=255u8 {
            vocab.push(alphabet.symbol(b).to_string(), vec![b]);
        }
        vocab
    }

    fn push(&mut self, token: String, bytes: Vec<u8>) -> u32 {
        let id = self.tokens.len() as u32;
        self.token_to_id.insert(token.clone(), id);
        self.tokens.push(token);
        self.bytes.push(bytes);
        id
    }

    /// Id of `token`, adding it as a learned token if absent.
    pub(crate) fn intern(&mut self, token: &str) -> Result<u32> {
        if let Some(&id) = self.token_to_id.get(token) {
            return Ok(id);
        }
        let bytes = ByteAlphabet::get()
            .decode(token)
            .ok_or_else(|| Error::invalid(format!("token {token:?} is outside the byte alphabet")))?;
        Ok(self.push(token.to_string(), bytes))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Raw bytes a token stands for; empty for specials.
    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        self.bytes.get(id as usize).map(Vec::as_slice)
    }

    pub fn specials(&self) -> &SpecialTokens {
        &self.specials
    }

    pub fn special_ids(&self) -> SpecialIds {
        SPECIAL_IDS
    }

    pub fn is_special(&self, id: u32) -> bool {
        (id as usize) < SpecialTokens::COUNT
    }

    pub fn byte_id(&self, byte: u8) -> u32 {
        BYTE_OFFSET + byte as u32
    }

    /// Tokens in id order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.tokens.iter().enumerate().map(|(i, t)| (i as u32, t.as_str()))
    }
}

/// Ordered merges as pairs of token ids; rank is the list index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<Merge>,
    ranks: HashMap<(u32, u32), u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge {
    pub left: u32,
    pub right: u32,
    pub result: u32,
}

impl MergeTable {
    pub(crate) fn push(&mut self, merge: Merge) -> Result<()> {
        let pair = (merge.left, merge.right);
        if self.ranks.contains_key(&pair) {
            return Err(Error::invalid(format!("duplicate merge {pair:?}")));
        }
        self.ranks.insert(pair, self.merges.len() as u32);
        self.merges.push(merge);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    pub fn rank(&self, left: u32, right: u32) -> Option<u32> {
        self.ranks.get(&(left, right)).copied()
    }

    pub fn get(&self, rank: usize) -> Option<&Merge> {
        self.merges.get(rank)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Merge> {
        self.merges.iter()
    }
}

/// Encoded ids plus the byte span of every token in the source text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub offsets: Vec<(usize, usize)>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Trained merges plus vocabulary. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenizer {
    vocab: Vocabulary,
    merges: MergeTable,
}

impl Tokenizer {
    pub fn new(vocab: Vocabulary, merges: MergeTable) -> Self {
        Tokenizer { vocab, merges }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn merges(&self) -> &MergeTable {
        &self.merges
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        let mut out = TokenSequence::default();
        let mut base = 0usize;
        let mut symbols: Vec<(u32, usize, usize)> = Vec::new();
        for piece in presplit::split(text) {
            symbols.clear();
            symbols.extend(
                piece
                    .bytes()
                    .enumerate()
                    .map(|(i, b)| (self.vocab.byte_id(b), base + i, base + i + 1)),
            );
            self.apply_merges(&mut symbols);
            for &(id, start, end) in &symbols {
                out.ids.push(id);
                out.offsets.push((start, end));
            }
            base += piece.len();
        }
        out
    }

    /// Encodes raw bytes, rejecting invalid UTF-8 at the boundary.
    pub fn encode_bytes(&self, bytes: &[u8]) -> Result<TokenSequence> {
        let text = std::str::from_utf8(bytes).map_err(|_| Error::InvalidUtf8)?;
        Ok(self.encode(text))
    }

    /// Just the ids, without offset bookkeeping.
    pub fn encode_ids(&self, text: &str) -> Vec<u32> {
        self.encode(text).ids
    }

    /// Repeatedly merges every occurrence of the lowest-ranked adjacent pair.
    fn apply_merges(&self, symbols: &mut Vec<(u32, usize, usize)>) {
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.merges.rank(w[0].0, w[1].0))
                .min();
            let Some(rank) = best else { break };
            let merge = self.merges.merges[rank as usize];
            let mut write = 0;
            let mut read = 0;
            while read < symbols.len() {
                if read + 1 < symbols.len()
                    && symbols[read].0 == merge.left
                    && symbols[read + 1].0 == merge.right
                {
                    symbols[write] = (merge.result, symbols[read].1, symbols[read + 1].2);
                    read += 2;
                } else {
                    symbols[write] = symbols[read];
                    read += 1;
                }
                write += 1;
            }
            symbols.truncate(write);
        }
    }

    /// Bytes for `ids`; specials contribute nothing, unknown ids fail.
    pub fn decode_bytes(&self, ids: &[u32]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(ids.len() * 4);
        for &id in ids {
            let bytes = self.vocab.token_bytes(id).ok_or(Error::UnknownTokenId(id))?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        String::from_utf8(self.decode_bytes(ids)?).map_err(|_| Error::InvalidUtf8)
    }
}
