use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub total_steps: u64,
    pub global_batch_sequences: u64,
    pub sequence_length: u64,
    pub corpus_tokens: u64,
}

impl BudgetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 || self.global_batch_sequences == 0 || self.sequence_length == 0 || self.corpus_tokens == 0 {
            return Err(Error::invalid("budget fields must all be positive"));
        }
        Ok(())
    }

    /// Tokens consumed by the whole run.
    pub fn tokens_processed(&self) -> u128 {
        self.total_steps as u128 * self.global_batch_sequences as u128 * self.sequence_length as u128
    }
}

/// Passes over the corpus implied by the step budget.
pub fn estimate_epochs<S: Scalar>(budget: &BudgetSpec) -> Result<S> {
    budget.validate()?;
    let processed = S::from_u128(budget.tokens_processed())
        .ok_or_else(|| Error::invalid("token budget does not fit the scalar type"))?;
    Ok(processed / S::from_count(budget.corpus_tokens))
}

/// Corpus size that makes the budget come out to `epochs` passes.
pub fn corpus_tokens_for_epochs(total_steps: u64, global_batch_sequences: u64, sequence_length: u64, epochs: f64) -> u64 {
    let processed = total_steps as f64 * global_batch_sequences as f64 * sequence_length as f64;
    (processed / epochs).round() as u64
}

/// Token count of a packed corpus, with or without padding positions.
pub fn packed_corpus_tokens(sequences: &[Vec<u32>], pad_id: u32, count_padding: bool) -> u64 {
    sequences
        .iter()
        .map(|s| {
            if count_padding {
                s.len() as u64
            } else {
                s.iter().filter(|&&t| t != pad_id).count() as u64
            }
        })
        .sum()
}
