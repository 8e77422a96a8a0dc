//! Fixture generators shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use encbench::bpe::{presplit, ByteAlphabet};
use encbench::data::{LabeledText, Sentiment, TaggedSentence};
use encbench::metrics::BioTag;
use encbench::rng::{self, SeededRng};
use encbench::Exact;

const LETTERS: &[char] = &[
    'א', 'ב', 'ג', 'ד', 'ה', 'ו', 'ז', 'ח', 'ט', 'י', 'כ', 'ל', 'מ', 'נ', 'ס', 'ע', 'פ', 'צ', 'ק', 'ר', 'ש', 'ת', 'ך',
    'ם', 'ן', 'ף', 'ץ',
];

/// Hebrew-script pseudo-words with a Zipfian frequency profile.
pub struct HebrewText {
    lexicon: Vec<String>,
    cumulative: Vec<f64>,
    rng: SeededRng,
}

impl HebrewText {
    pub fn new(lexicon_size: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        let mut seen = std::collections::HashSet::new();
        let mut lexicon = Vec::with_capacity(lexicon_size);
        while lexicon.len() < lexicon_size {
            let len = 2 + rng::below(&mut rng, 7) as usize;
            let w: String = (0..len).map(|_| LETTERS[rng::below(&mut rng, LETTERS.len() as u64) as usize]).collect();
            if seen.insert(w.clone()) {
                lexicon.push(w);
            }
        }
        let mut total = 0.0;
        let cumulative = (1..=lexicon_size)
            .map(|r| {
                total += 1.0 / (r as f64).powf(1.07);
                total
            })
            .collect::<Vec<_>>();
        let cumulative = cumulative.iter().map(|c| c / total).collect();
        HebrewText { lexicon, cumulative, rng }
    }

    pub fn word(&mut self) -> &str {
        let u = rng::unit(&mut self.rng);
        let i = self.cumulative.partition_point(|&c| c < u).min(self.lexicon.len() - 1);
        &self.lexicon[i]
    }

    pub fn below(&mut self, n: u64) -> u64 {
        rng::below(&mut self.rng, n)
    }

    /// A sentence of `words` words with occasional digits and punctuation.
    pub fn sentence(&mut self, words: usize) -> String {
        let mut s = String::new();
        for i in 0..words {
            if i > 0 {
                s.push(' ');
            }
            if self.below(40) == 0 {
                s.push_str(&self.below(2030).to_string());
            } else {
                let w = self.word().to_string();
                s.push_str(&w);
            }
            if self.below(12) == 0 {
                s.push(if self.below(2) == 0 { ',' } else { '.' });
            }
        }
        s
    }

    /// A document of a few sentences, roughly `bytes` long.
    pub fn document(&mut self, bytes: usize) -> String {
        let mut doc = String::new();
        while doc.len() < bytes {
            if !doc.is_empty() {
                doc.push(' ');
            }
            let n = 4 + self.below(14) as usize;
            doc.push_str(&self.sentence(n));
        }
        doc
    }
}

/// `n` distinct labeled comments; label-bearing words make the task learnable.
pub fn sentiment_items(n: usize, seed: u64) -> Vec<LabeledText> {
    let mut g = HebrewText::new(3000, seed);
    let cues = [["טוב", "מעולה", "אוהב"], ["אולי", "רגיל", "בסדר"], ["רע", "נורא", "שונא"]];
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let label = Sentiment::from_index(g.below(3) as usize).unwrap();
        let words = 3 + g.below(12) as usize;
        let mut text = g.sentence(words);
        let cue = cues[label.index()][g.below(3) as usize];
        text.push(' ');
        text.push_str(cue);
        if seen.insert(text.clone()) {
            out.push(LabeledText::new(&text, label).unwrap());
        }
    }
    out
}

/// Sentences where PER names follow one trigger word and LOC names another.
pub fn ner_sentences(n: usize, seed: u64) -> Vec<TaggedSentence> {
    let mut g = HebrewText::new(2000, seed);
    let persons = ["דני", "רותי", "משה", "יעל", "אבי"];
    let places = ["חיפה", "ירושלים", "אילת", "עכו"];
    (0..n)
        .map(|_| {
            let mut tokens = Vec::new();
            let mut tags = Vec::new();
            let len = 4 + g.below(10) as usize;
            while tokens.len() < len {
                match g.below(6) {
                    0 => {
                        tokens.push("אמר".to_string());
                        tags.push(BioTag::Outside);
                        tokens.push(persons[g.below(5) as usize].to_string());
                        tags.push(BioTag::Begin("PER".into()));
                        if g.below(3) == 0 {
                            tokens.push("כהן".to_string());
                            tags.push(BioTag::Inside("PER".into()));
                        }
                    }
                    1 => {
                        tokens.push("ב".to_string());
                        tags.push(BioTag::Outside);
                        tokens.push(places[g.below(4) as usize].to_string());
                        tags.push(BioTag::Begin("LOC".into()));
                    }
                    _ => {
                        tokens.push(g.word().to_string());
                        tags.push(BioTag::Outside);
                    }
                }
            }
            TaggedSentence::new(tokens, tags).unwrap()
        })
        .collect()
}

// BPE reference

/// Recount-every-iteration BPE over symbol strings.
pub fn naive_merges(texts: &[String], vocab_size: usize, min_freq: u64) -> Vec<(String, String)> {
    let alphabet = ByteAlphabet::get();
    let mut words: BTreeMap<Vec<String>, u64> = BTreeMap::new();
    for t in texts {
        for piece in presplit::split(t) {
            let symbols = piece.bytes().map(|b| alphabet.symbol(b).to_string()).collect();
            *words.entry(symbols).or_default() += 1;
        }
    }
    let mut known: HashSet<String> = (0..=255u8).map(|b| alphabet.symbol(b).to_string()).collect();
    let target = vocab_size - 5 - 256;
    let mut learned = 0;
    let mut merges = Vec::new();
    while learned < target {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (w, &c) in &words {
            for p in w.windows(2) {
                *counts.entry((p[0].clone(), p[1].clone())).or_default() += c;
            }
        }
        // max count; the BTreeMap order makes the first maximum the smallest pair
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &c) in &counts {
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((pair, c));
            }
        }
        let Some((pair, count)) = best else { break };
        if count < min_freq {
            break;
        }
        let pair = pair.clone();
        let joined = format!("{}{}", pair.0, pair.1);
        if known.insert(joined.clone()) {
            learned += 1;
        }
        let mut next: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for (w, c) in words {
            let mut out = Vec::with_capacity(w.len());
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    out.push(joined.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *next.entry(out).or_default() += c;
        }
        words = next;
        merges.push(pair);
    }
    merges
}

/// Small corpora (at most 10 kB) over a few toy alphabets.
pub fn toy_corpus(seed: u64) -> Vec<String> {
    let mut r = rng::seeded(seed);
    let alphabets: [&[&str]; 3] = [
        &["a", "b", "c", "d", "ab", "ba"],
        &["ש", "ל", "ו", "ם", "א", "ב"],
        &["x", "y", "1", "2", ".", "!", "é"],
    ];
    let letters = alphabets[(seed % 3) as usize];
    let n_words = 10 + rng::below(&mut r, 30) as usize;
    let lexicon: Vec<String> = (0..n_words)
        .map(|_| {
            let len = 1 + rng::below(&mut r, 6) as usize;
            (0..len).map(|_| letters[rng::below(&mut r, letters.len() as u64) as usize]).collect()
        })
        .collect();
    let mut texts = Vec::new();
    let mut bytes = 0;
    let budget = 500 + rng::below(&mut r, 9000) as usize;
    while bytes < budget {
        let len = 1 + rng::below(&mut r, 12) as usize;
        let mut line = String::new();
        for i in 0..len {
            if i > 0 {
                line.push_str(if rng::below(&mut r, 10) == 0 { "  " } else { " " });
            }
            // skewed word choice so counts differ
            let a = rng::below(&mut r, n_words as u64);
            let b = rng::below(&mut r, n_words as u64);
            line.push_str(&lexicon[a.min(b) as usize]);
        }
        bytes += line.len();
        texts.push(line);
    }
    texts
}

/// Random UTF-8 mixing ASCII, Hebrew, points, Latin, CJK, emoji and controls.
pub fn random_text(r: &mut SeededRng) -> String {
    let ranges: [(u32, u32); 7] = [
        (0x20, 0x7e),
        (0x05d0, 0x05ea),
        (0x0591, 0x05c7),
        (0x00a0, 0x024f),
        (0x4e00, 0x4e80),
        (0x1f600, 0x1f64f),
        (0x09, 0x0d),
    ];
    let len = rng::below(r, 40) as usize;
    (0..len)
        .map(|_| {
            let (lo, hi) = ranges[rng::below(r, ranges.len() as u64) as usize];
            char::from_u32(lo + rng::below(r, (hi - lo + 1) as u64) as u32).unwrap()
        })
        .collect()
}

// span F1 reference

pub const TAGS: [&str; 5] = ["O", "B-A", "I-A", "B-B", "I-B"];

/// (start, end, type) runs, read directly off the tag strings. A run starts at
/// any B-X, or at an I-X not preceded by B-X / I-X of the same type.
pub fn oracle_spans(tags: &[&str]) -> Vec<(usize, usize, char)> {
    let ty = |t: &str| t.chars().last().unwrap();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if tags[i] == "O" {
            i += 1;
            continue;
        }
        let t = ty(tags[i]);
        let mut j = i + 1;
        while j < tags.len() && tags[j].starts_with("I-") && ty(tags[j]) == t {
            j += 1;
        }
        out.push((i, j, t));
        i = j;
    }
    out
}

/// Pooled exact-match F1 from the oracle spans, by pairwise comparison.
pub fn oracle_f1(pairs: &[(Vec<&str>, Vec<&str>)]) -> Exact {
    let (mut tp, mut ng, mut np) = (0i64, 0i64, 0i64);
    for (g, p) in pairs {
        let gs = oracle_spans(g);
        let ps = oracle_spans(p);
        ng += gs.len() as i64;
        np += ps.len() as i64;
        tp += gs.iter().filter(|s| ps.contains(s)).count() as i64;
    }
    if ng + np == 0 {
        return Exact::from_integer(1);
    }
    Exact::new(2 * tp, ng + np)
}

/// Every tag sequence of length `len` over [`TAGS`].
pub fn all_sequences(len: usize) -> Vec<Vec<&'static str>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|s| TAGS.iter().map(move |t| [s.clone(), vec![*t]].concat()))
            .collect();
    }
    out
}
