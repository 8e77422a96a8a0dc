use serde::{Deserialize, Serialize};

use crate::bpe::Vocabulary;
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};

/// Dynamic masking parameters. Shares split the selected positions between
/// the mask token, a random token and leaving the token unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingPolicy {
    pub mask_probability: f64,
    pub mask_token_share: f64,
    pub random_token_share: f64,
    pub keep_share: f64,
    pub seed: u64,
}

impl MaskingPolicy {
    pub fn new(mask_probability: f64, mask_token_share: f64, random_token_share: f64, keep_share: f64, seed: u64) -> Result<Self> {
        let all = [mask_probability, mask_token_share, random_token_share, keep_share];
        if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::invalid(format!("masking probabilities must lie in [0,1]: {all:?}")));
        }
        if (mask_token_share + random_token_share + keep_share - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("mask/random/keep shares must sum to 1"));
        }
        Ok(MaskingPolicy {
            mask_probability,
            mask_token_share,
            random_token_share,
            keep_share,
            seed,
        })
    }

    /// 15% of positions; 80% mask, 10% random, 10% kept.
    pub fn standard(seed: u64) -> Self {
        Self::new(0.15, 0.8, 0.1, 0.1, seed).expect("valid defaults")
    }
}

/// What a masking pass needs to know about the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskingVocab {
    pub mask_id: u32,
    pub vocab_size: u32,
    /// Ids below this are specials: never selected, never drawn as random tokens.
    pub first_regular_id: u32,
}

impl MaskingVocab {
    pub fn from_vocabulary(vocab: &Vocabulary) -> Self {
        MaskingVocab {
            mask_id: vocab.special_ids().mask,
            vocab_size: vocab.len() as u32,
            first_regular_id: crate::bpe::BYTE_OFFSET,
        }
    }

    pub fn is_special(&self, id: u32) -> bool {
        id < self.first_regular_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Replacement {
    Mask,
    Random,
    Keep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSequence {
    pub input_ids: Vec<u32>,
    pub target_positions: Vec<usize>,
    pub target_ids: Vec<u32>,
    pub replacements: Vec<Replacement>,
}

/// Draws a fresh mask pattern for `sequence`; the pattern is a function of
/// `(policy.seed, epoch_seed)`, so each epoch sees a different corruption.
pub fn apply_masking(sequence: &[u32], policy: &MaskingPolicy, vocab: &MaskingVocab, epoch_seed: u64) -> MaskedSequence {
    let mut rng = rng::seeded(rng::derive_seed(policy.seed, epoch_seed));
    mask_with(sequence, policy, vocab, &mut rng)
}

fn mask_with(sequence: &[u32], policy: &MaskingPolicy, vocab: &MaskingVocab, rng: &mut SeededRng) -> MaskedSequence {
    let mut out = MaskedSequence {
        input_ids: sequence.to_vec(),
        target_positions: Vec::new(),
        target_ids: Vec::new(),
        replacements: Vec::new(),
    };
    if policy.mask_probability == 0.0 {
        return out;
    }
    let regular = vocab.vocab_size.saturating_sub(vocab.first_regular_id) as u64;
    for (pos, &id) in sequence.iter().enumerate() {
        if vocab.is_special(id) || rng::unit(rng) >= policy.mask_probability {
            continue;
        }
        let u = rng::unit(rng);
        let replacement = if u < policy.mask_token_share {
            Replacement::Mask
        } else if u < policy.mask_token_share + policy.random_token_share && regular > 0 {
            Replacement::Random
        } else {
            Replacement::Keep
        };
        out.input_ids[pos] = match replacement {
            Replacement::Mask => vocab.mask_id,
            Replacement::Random => vocab.first_regular_id + rng::below(rng, regular) as u32,
            Replacement::Keep => id,
        };
        out.target_positions.push(pos);
        out.target_ids.push(id);
        out.replacements.push(replacement);
    }
    out
}

/// Masks a batch for one epoch; sequence `i` uses its own derived stream.
pub fn mask_epoch(sequences: &[Vec<u32>], policy: &MaskingPolicy, vocab: &MaskingVocab, epoch: u64) -> Vec<MaskedSequence> {
    use rayon::prelude::*;
    let epoch_seed = rng::derive_seed(epoch, 0xe90c);
    sequences
        .par_iter()
        .enumerate()
        .map(|(i, s)| apply_masking(s, policy, vocab, rng::derive_seed(epoch_seed, i as u64)))
        .collect()
}
