//! Evaluation metrics: span micro-F1, class macro-F1, perplexity and the
//! sequence-length statistics used to pick a maximum input length.

mod f1;
mod lengths;
mod spans;

pub use f1::{macro_f1, macro_f1_spans, micro_f1_spans, unweighted_mean, MacroF1, SpanF1, SpanMacroF1};
pub use lengths::{length_stats, nearest_rank, select_bucket, LengthStats, BUCKET_WIDTH};
pub use spans::{
    bio_to_spans, bio_violations, parse_tags, repair_bio, spans_to_bio, BioTag, BioViolation, Span,
};

use crate::error::{Error, Result};
use crate::scalar::FloatScalar;

/// `exp(mean NLL)` over per-position natural-log losses.
pub fn perplexity<F: FloatScalar>(nlls: &[F]) -> Result<F> {
    if nlls.is_empty() {
        return Err(Error::invalid("perplexity of an empty loss list"));
    }
    let mean = nlls.iter().fold(F::zero(), |acc, &x| acc + x) / F::from_count(nlls.len() as u64);
    Ok(mean.exp())
}
