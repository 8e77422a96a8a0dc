use std::sync::Arc;

use xxhash_rust::xxh3::Xxh3;

use super::config::TrialConfig;
use super::trainer::{EpochContext, Split, TaskData, Trainer};
use crate::bpe::Tokenizer;
use crate::data::Sentiment;
use crate::error::{Error, Result};
use crate::metrics::{bio_to_spans, macro_f1, micro_f1_spans, BioTag};
use crate::rng;

/// Sparse feature vector: sorted `(index, value)` pairs.
type Features = Vec<(u32, f64)>;

#[derive(Debug, Default)]
struct Examples {
    features: Vec<Features>,
    labels: Vec<usize>,
    /// For tagging: number of word examples in each sentence, in order.
    sentence_lengths: Vec<usize>,
}

#[derive(Debug)]
struct Prepared {
    dim: usize,
    classes: Vec<String>,
    train: Examples,
    valid: Examples,
    test: Examples,
    /// Gold tags per split, for span scoring.
    gold_tags: [Vec<Vec<BioTag>>; 3],
}

impl Prepared {
    fn split(&self, split: Split) -> &Examples {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }
}

/// Multinomial logistic regression over bag-of-subword features from a BPE
/// tokenizer, trained with minibatch AdaGrad. For tagging, each word is an
/// example whose features are its own subwords and those of its neighbours.
#[derive(Debug, Clone)]
pub struct ProbeTrainer {
    tokenizer: Arc<Tokenizer>,
    /// Grid learning rates are sized for transformer fine-tuning; the probe
    /// multiplies them by this factor.
    pub lr_scale: f64,
    tokenizer_hash: u64,
}

#[derive(Debug, Clone)]
pub struct ProbeState {
    weights: Vec<f64>,
    /// AdaGrad accumulators of squared gradients.
    squares: Vec<f64>,
    prepared: Arc<Prepared>,
}

impl ProbeTrainer {
    pub fn new(tokenizer: Arc<Tokenizer>) -> Self {
        let mut h = Xxh3::new();
        for (id, token) in tokenizer.vocab().iter() {
            h.update(&id.to_le_bytes());
            h.update(token.as_bytes());
        }
        for m in tokenizer.merges().iter() {
            h.update(&m.left.to_le_bytes());
            h.update(&m.right.to_le_bytes());
        }
        ProbeTrainer {
            tokenizer,
            lr_scale: 1e4,
            tokenizer_hash: h.digest(),
        }
    }

    pub fn with_lr_scale(mut self, lr_scale: f64) -> Self {
        self.lr_scale = lr_scale;
        self
    }

    fn vocab(&self) -> usize {
        self.tokenizer.vocab_size()
    }

    /// Normalized subword counts, shifted by `offset`.
    fn bag(&self, ids: &[u32], offset: usize, out: &mut Vec<(u32, f64)>) {
        if ids.is_empty() {
            return;
        }
        let w = 1.0 / (ids.len() as f64).sqrt();
        out.extend(ids.iter().map(|&id| ((offset + id as usize) as u32, w)));
    }

    fn finish(mut feats: Features, bias: usize) -> Features {
        feats.push((bias as u32, 1.0));
        feats.sort_unstable_by_key(|f| f.0);
        let mut merged: Features = Vec::with_capacity(feats.len());
        for (i, v) in feats {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged
    }

    fn prepare(&self, config: &TrialConfig, data: &TaskData) -> Result<Prepared> {
        // two positions reserved for the sequence delimiters
        let budget = (config.sequence_length as usize).saturating_sub(2).max(1);
        let v = self.vocab();
        match data {
            TaskData::Classification(splits) => {
                let build = |items: &[crate::data::LabeledText]| {
                    let mut ex = Examples::default();
                    for item in items {
                        let mut ids = self.tokenizer.encode_ids(&item.text());
                        ids.truncate(budget);
                        let mut f = Vec::new();
                        self.bag(&ids, 0, &mut f);
                        ex.features.push(Self::finish(f, v));
                        ex.labels.push(item.label.index());
                    }
                    ex
                };
                Ok(Prepared {
                    dim: v + 1,
                    classes: Sentiment::ALL.iter().map(|s| s.as_str().to_string()).collect(),
                    train: build(&splits.train),
                    valid: build(&splits.valid),
                    test: build(&splits.test),
                    gold_tags: Default::default(),
                })
            }
            TaskData::Tagging(splits) => {
                let mut classes: Vec<String> = splits
                    .train
                    .iter()
                    .flat_map(|s| s.tags.iter().map(|t| t.to_string()))
                    .chain(std::iter::once("O".to_string()))
                    .collect();
                classes.sort();
                classes.dedup();
                let outside = classes.binary_search(&"O".to_string()).expect("O present");
                let build = |sentences: &[crate::data::TaggedSentence]| {
                    let mut ex = Examples::default();
                    let mut gold = Vec::with_capacity(sentences.len());
                    for s in sentences {
                        let mut used = 0usize;
                        let words: Vec<Vec<u32>> = s
                            .tokens
                            .iter()
                            .enumerate()
                            .map(|(i, w)| {
                                let text = if i == 0 { w.clone() } else { format!(" {w}") };
                                let mut ids = self.tokenizer.encode_ids(&text);
                                ids.truncate(budget.saturating_sub(used));
                                used += ids.len();
                                ids
                            })
                            .collect();
                        for (i, tag) in s.tags.iter().enumerate() {
                            let mut f = Vec::new();
                            self.bag(&words[i], 0, &mut f);
                            if i > 0 {
                                self.bag(&words[i - 1], v, &mut f);
                            }
                            if i + 1 < words.len() {
                                self.bag(&words[i + 1], 2 * v, &mut f);
                            }
                            ex.features.push(Self::finish(f, 3 * v));
                            ex.labels.push(classes.binary_search(&tag.to_string()).unwrap_or(outside));
                        }
                        ex.sentence_lengths.push(s.len());
                        gold.push(s.tags.clone());
                    }
                    (ex, gold)
                };
                let (train, g_train) = build(&splits.train);
                let (valid, g_valid) = build(&splits.valid);
                let (test, g_test) = build(&splits.test);
                Ok(Prepared {
                    dim: 3 * v + 1,
                    classes,
                    train,
                    valid,
                    test,
                    gold_tags: [g_train, g_valid, g_test],
                })
            }
            TaskData::Synthetic { .. } => Err(Error::Trainer("the probe trainer needs real task data".into())),
        }
    }
}

fn probabilities(weights: &[f64], dim: usize, classes: usize, x: &Features, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..classes).map(|c| {
        let row = &weights[c * dim..(c + 1) * dim];
        x.iter().map(|&(i, v)| row[i as usize] * v).sum::<f64>()
    }));
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for s in out.iter_mut() {
        *s = (*s - max).exp();
        z += *s;
    }
    for s in out.iter_mut() {
        *s /= z;
    }
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

impl ProbeState {
    fn predict(&self, examples: &Examples) -> Vec<usize> {
        let p = &self.prepared;
        let mut probs = Vec::with_capacity(p.classes.len());
        examples
            .features
            .iter()
            .map(|x| {
                probabilities(&self.weights, p.dim, p.classes.len(), x, &mut probs);
                argmax(&probs)
            })
            .collect()
    }
}

impl Trainer for ProbeTrainer {
    type State = ProbeState;

    fn identity(&self) -> String {
        format!("probe-v1:lr_scale={:e}:tokenizer={:016x}", self.lr_scale, self.tokenizer_hash)
    }

    fn init(&self, config: &TrialConfig, data: &TaskData) -> Result<ProbeState> {
        let prepared = self.prepare(config, data)?;
        if prepared.train.features.is_empty() {
            return Err(Error::Trainer("empty training split".into()));
        }
        let size = prepared.dim * prepared.classes.len();
        Ok(ProbeState {
            weights: vec![0.0; size],
            squares: vec![0.0; size],
            prepared: Arc::new(prepared),
        })
    }

    fn train_one_epoch(&self, state: &mut ProbeState, config: &TrialConfig, ctx: &EpochContext, data: &TaskData) -> Result<()> {
        let prepared = state.prepared.clone();
        let (dim, k) = (prepared.dim, prepared.classes.len());
        let train = &prepared.train;
        // batches are drawn over sentences for tagging, items otherwise
        let units: Vec<std::ops::Range<usize>> = if train.sentence_lengths.is_empty() {
            (0..train.features.len()).map(|i| i..i + 1).collect()
        } else {
            let mut start = 0;
            train
                .sentence_lengths
                .iter()
                .map(|&n| {
                    let r = start..start + n;
                    start += n;
                    r
                })
                .collect()
        };
        debug_assert_eq!(units.len(), data.train_size());
        let order = rng::permutation(units.len(), ctx.shuffle_seed(config));
        let mut probs = Vec::with_capacity(k);
        let mut update: Vec<(usize, f64)> = Vec::new();
        for (step, batch) in order.chunks(config.batch_size as usize).enumerate() {
            let lr = ctx.lr(step as u64) * self.lr_scale;
            if lr == 0.0 {
                continue;
            }
            update.clear();
            let mut n = 0usize;
            for &u in batch {
                for e in units[u].clone() {
                    let x = &train.features[e];
                    probabilities(&state.weights, dim, k, x, &mut probs);
                    probs[train.labels[e]] -= 1.0;
                    for (c, &g) in probs.iter().enumerate() {
                        for &(i, v) in x {
                            update.push((c * dim + i as usize, g * v));
                        }
                    }
                    n += 1;
                }
            }
            if n == 0 {
                continue;
            }
            update.sort_unstable_by_key(|u| u.0);
            let inv_n = 1.0 / n as f64;
            let mut k = 0;
            while k < update.len() {
                let i = update[k].0;
                let mut g = 0.0;
                while k < update.len() && update[k].0 == i {
                    g += update[k].1;
                    k += 1;
                }
                g *= inv_n;
                state.squares[i] += g * g;
                state.weights[i] -= lr * g / (state.squares[i].sqrt() + 1e-8);
            }
        }
        if state.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Trainer(format!("weights diverged at epoch {}", ctx.epoch)));
        }
        Ok(())
    }

    fn evaluate(&self, state: &ProbeState, _config: &TrialConfig, split: Split, _data: &TaskData) -> Result<f64> {
        let prepared = &state.prepared;
        let examples = prepared.split(split);
        let predicted = state.predict(examples);
        if examples.sentence_lengths.is_empty() {
            return Ok(macro_f1::<f64>(&examples.labels, &predicted, prepared.classes.len())?.macro_f1);
        }
        let gold_tags = &prepared.gold_tags[split as usize];
        let mut gold = Vec::with_capacity(gold_tags.len());
        let mut pred = Vec::with_capacity(gold_tags.len());
        let mut start = 0;
        for (s, (&n, tags)) in examples.sentence_lengths.iter().zip(gold_tags).enumerate() {
            let tags_pred: Vec<BioTag> = predicted[start..start + n]
                .iter()
                .map(|&c| prepared.classes[c].parse().expect("class names are tags"))
                .collect();
            gold.push(bio_to_spans(s, tags));
            pred.push(bio_to_spans(s, &tags_pred));
            start += n;
        }
        Ok(micro_f1_spans::<f64>(&gold, &pred)?.f1)
    }
}
