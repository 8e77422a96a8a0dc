//! Greedy byte-level BPE training over a pre-token frequency table.
//!
//! Each distinct pre-token is stored once with its corpus frequency. Pair
//! counts are built once (in parallel, summed deterministically) and then
//! maintained incrementally: merging a pair only touches the words that
//! contain it. A lazy max-heap picks the next pair; stale heap entries
//! always over-estimate, so they are re-queued with the true count when
//! popped.
//!
//! Ties on frequency go to the lexicographically smallest
//! `(left, right)` pair of symbol strings.

use std::cmp::Ordering;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::path::Path;
use std::sync::Arc;

use log::{debug, info, warn};
use rayon::prelude::*;
use xxhash_rust::xxh3::Xxh3;

use super::alphabet::ByteAlphabet;
use super::model::{Merge, MergeTable, SpecialTokens, Tokenizer, Vocabulary, BYTE_OFFSET};
use super::presplit;
use crate::corpus::{CorpusManifest, ShardReader};
use crate::error::{Error, Result};

pub const DEFAULT_MIN_PAIR_FREQUENCY: u64 = 2;

/// Distinct pre-tokens and how often each occurs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PretokenCounts {
    counts: HashMap<String, u64>,
    bytes_seen: u64,
}

impl PretokenCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_text(&mut self, text: &str) {
        self.bytes_seen += text.len() as u64;
        for piece in presplit::split(text) {
            match self.counts.get_mut(piece) {
                Some(c) => *c += 1,
                None => {
                    self.counts.insert(piece.to_string(), 1);
                }
            }
        }
    }

    pub fn merge(&mut self, other: PretokenCounts) {
        self.bytes_seen += other.bytes_seen;
        if self.counts.len() < other.counts.len() {
            let mine = std::mem::replace(&mut self.counts, other.counts);
            for (k, v) in mine {
                *self.counts.entry(k).or_default() += v;
            }
        } else {
            for (k, v) in other.counts {
                *self.counts.entry(k).or_default() += v;
            }
        }
    }

    /// Counts over many texts in parallel; the result does not depend on
    /// the number of workers.
    pub fn from_texts<S: AsRef<str> + Sync>(texts: &[S]) -> Self {
        texts
            .par_chunks(256)
            .map(|chunk| {
                let mut local = PretokenCounts::new();
                for t in chunk {
                    local.add_text(t.as_ref());
                }
                local
            })
            .reduce(PretokenCounts::new, |mut a, b| {
                a.merge(b);
                a
            })
    }

    /// Streams every shard of `manifest`; one shard is in memory at a time.
    pub fn from_manifest(manifest: &CorpusManifest) -> Result<Self> {
        let mut total = PretokenCounts::new();
        for path in manifest.shard_paths() {
            total.merge(Self::from_shard(&path)?);
        }
        Ok(total)
    }

    fn from_shard(path: &Path) -> Result<Self> {
        let texts: Vec<String> = ShardReader::open(path)?
            .map(|d| d.map(|d| d.text))
            .collect::<Result<_>>()?;
        Ok(Self::from_texts(&texts))
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn bytes_seen(&self) -> u64 {
        self.bytes_seen
    }

    pub fn count(&self, piece: &str) -> u64 {
        self.counts.get(piece).copied().unwrap_or(0)
    }

    /// Entries sorted by piece.
    pub fn sorted(&self) -> Vec<(&str, u64)> {
        let mut entries: Vec<(&str, u64)> = self.counts.iter().map(|(k, &v)| (k.as_str(), v)).collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        entries
    }

    /// Order-independent fingerprint of the table.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Xxh3::new();
        for (piece, count) in self.sorted() {
            hasher.update(&(piece.len() as u64).to_le_bytes());
            hasher.update(piece.as_bytes());
            hasher.update(&count.to_le_bytes());
        }
        format!("xxh3-128:{:032x}", hasher.digest128())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainerConfig {
    /// Target size including the specials and the 256 byte symbols.
    pub vocab_size: usize,
    pub min_pair_frequency: u64,
    pub specials: SpecialTokens,
}

impl TrainerConfig {
    pub fn new(vocab_size: usize) -> Self {
        TrainerConfig {
            vocab_size,
            min_pair_frequency: DEFAULT_MIN_PAIR_FREQUENCY,
            specials: SpecialTokens::default(),
        }
    }

    pub fn min_pair_frequency(mut self, min: u64) -> Self {
        self.min_pair_frequency = min;
        self
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub tokenizer: Tokenizer,
    /// False when the corpus ran out of frequent pairs before `vocab_size`.
    pub reached_target: bool,
    pub corpus_fingerprint: String,
}

type Pair = (u32, u32);

#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    count: u64,
    pair: Pair,
    left: Arc<str>,
    right: Arc<str>,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Symbol ids during training: `0..256` are the bytes, then merged tokens.
struct SymbolTable {
    strings: Vec<Arc<str>>,
    ids: HashMap<Arc<str>, u32>,
}

impl SymbolTable {
    fn new() -> Self {
        let alphabet = ByteAlphabet::get();
        let strings: Vec<Arc<str>> = (0..=255u8).map(|b| Arc::from(alphabet.symbol(b).to_string())).collect();
        let ids = strings.iter().enumerate().map(|(i, s)| (s.clone(), i as u32)).collect();
        SymbolTable { strings, ids }
    }

    fn intern(&mut self, s: String) -> (u32, bool) {
        if let Some(&id) = self.ids.get(s.as_str()) {
            return (id, false);
        }
        let id = self.strings.len() as u32;
        let s: Arc<str> = Arc::from(s);
        self.ids.insert(s.clone(), id);
        self.strings.push(s);
        (id, true)
    }

    fn candidate(&self, pair: Pair, count: u64) -> Candidate {
        Candidate {
            count,
            pair,
            left: self.strings[pair.0 as usize].clone(),
            right: self.strings[pair.1 as usize].clone(),
        }
    }
}

fn for_each_pair(word: &[u32], mut f: impl FnMut(Pair)) {
    for w in word.windows(2) {
        f((w[0], w[1]));
    }
}

fn merge_word(word: &[u32], pair: Pair, new_id: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && word[i] == pair.0 && word[i + 1] == pair.1 {
            out.push(new_id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

pub fn train(counts: &PretokenCounts, config: &TrainerConfig) -> Result<TrainOutcome> {
    let base = SpecialTokens::COUNT + 256;
    if config.vocab_size <= base {
        return Err(Error::invalid(format!(
            "vocab_size must exceed {base} (specials plus byte symbols), got {}",
            config.vocab_size
        )));
    }
    if counts.distinct() == 0 {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }
    let target_learned = config.vocab_size - base;
    let min_freq = config.min_pair_frequency.max(1);

    let sorted = counts.sorted();
    let freqs: Vec<u64> = sorted.iter().map(|&(_, c)| c).collect();
    let mut words: Vec<Vec<u32>> = sorted
        .iter()
        .map(|(piece, _)| piece.bytes().map(u32::from).collect())
        .collect();

    let mut pair_counts: HashMap<Pair, u64> = words
        .par_iter()
        .zip(freqs.par_iter())
        .fold(HashMap::new, |mut acc: HashMap<Pair, u64>, (word, &freq)| {
            for_each_pair(word, |p| *acc.entry(p).or_default() += freq);
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });

    let mut where_used: HashMap<Pair, Vec<u32>> = HashMap::with_capacity(pair_counts.len());
    for (w, word) in words.iter().enumerate() {
        let mut last: Option<Pair> = None;
        for_each_pair(word, |p| {
            if last != Some(p) {
                where_used.entry(p).or_default().push(w as u32);
            }
            last = Some(p);
        });
    }
    for list in where_used.values_mut() {
        list.dedup();
    }

    let mut symbols = SymbolTable::new();
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| symbols.candidate(pair, count))
        .collect();

    let mut merges: Vec<Pair> = Vec::new();
    let mut learned = 0usize;

    while learned < target_learned {
        let Some(top) = heap.pop() else { break };
        let actual = pair_counts.get(&top.pair).copied().unwrap_or(0);
        if actual != top.count {
            if actual > 0 {
                heap.push(symbols.candidate(top.pair, actual));
            }
            continue;
        }
        if actual < min_freq {
            break;
        }
        let pair = top.pair;
        let merged = format!("{}{}", top.left, top.right);
        let (new_id, fresh) = symbols.intern(merged);
        if fresh {
            learned += 1;
        }
        merges.push(pair);
        pair_counts.remove(&pair);

        let mut deltas: HashMap<Pair, i64> = HashMap::new();
        let mut new_pair_words: HashMap<Pair, Vec<u32>> = HashMap::new();
        for w in where_used.remove(&pair).unwrap_or_default() {
            let word = &words[w as usize];
            if !word.windows(2).any(|x| (x[0], x[1]) == pair) {
                continue;
            }
            let freq = freqs[w as usize] as i64;
            let merged_word = merge_word(word, pair, new_id);
            for_each_pair(word, |p| *deltas.entry(p).or_default() -= freq);
            for_each_pair(&merged_word, |p| {
                *deltas.entry(p).or_default() += freq;
                if p.0 == new_id || p.1 == new_id {
                    let list = new_pair_words.entry(p).or_default();
                    if list.last() != Some(&w) {
                        list.push(w);
                    }
                }
            });
            words[w as usize] = merged_word;
        }

        for (p, delta) in deltas {
            if p == pair || delta == 0 {
                continue;
            }
            match pair_counts.entry(p) {
                Entry::Occupied(mut e) => {
                    let updated = *e.get() as i64 + delta;
                    debug_assert!(updated >= 0);
                    if updated <= 0 {
                        e.remove();
                    } else {
                        *e.get_mut() = updated as u64;
                    }
                }
                Entry::Vacant(e) => {
                    debug_assert!(delta > 0);
                    if delta > 0 {
                        e.insert(delta as u64);
                    }
                }
            }
            if delta > 0 {
                if let Some(&count) = pair_counts.get(&p) {
                    heap.push(symbols.candidate(p, count));
                }
            }
        }
        for (p, ws) in new_pair_words {
            where_used.entry(p).or_default().extend(ws);
        }
        if merges.len() % 5000 == 0 {
            debug!("{} merges, {} learned tokens", merges.len(), learned);
        }
    }

    let reached_target = learned == target_learned;
    if !reached_target {
        warn!(
            "corpus supports only {} of {} requested tokens at min pair frequency {}",
            base + learned,
            config.vocab_size,
            min_freq
        );
    }
    info!("trained {} merges, vocabulary size {}", merges.len(), base + learned);

    let tokenizer = build_tokenizer(&symbols, &merges, config.specials.clone())?;
    Ok(TrainOutcome {
        tokenizer,
        reached_target,
        corpus_fingerprint: counts.fingerprint(),
    })
}

fn merge_counts(mut big: HashMap<Pair, u64>, small: HashMap<Pair, u64>) -> HashMap<Pair, u64> {
    for (k, v) in small {
        *big.entry(k).or_default() += v;
    }
    big
}

fn build_tokenizer(symbols: &SymbolTable, merges: &[Pair], specials: SpecialTokens) -> Result<Tokenizer> {
    let mut vocab = Vocabulary::base(specials);
    let mut table = MergeTable::default();
    let to_vocab = |vocab: &mut Vocabulary, id: u32| -> Result<u32> {
        if id < 256 {
            Ok(BYTE_OFFSET + id)
        } else {
            vocab.intern(&symbols.strings[id as usize])
        }
    };
    for &(l, r) in merges {
        let left = to_vocab(&mut vocab, l)?;
        let right = to_vocab(&mut vocab, r)?;
        let merged = format!("{}{}", symbols.strings[l as usize], symbols.strings[r as usize]);
        let result = vocab.intern(&merged)?;
        table.push(Merge { left, right, result })?;
    }
    Ok(Tokenizer::new(vocab, table))
}

/// Convenience wrapper: count pre-tokens over `texts` and train.
pub fn train_from_texts<S: AsRef<str> + Sync>(texts: &[S], config: &TrainerConfig) -> Result<TrainOutcome> {
    train(&PretokenCounts::from_texts(texts), config)
}
