//! Masked-LM data preparation and pretraining bookkeeping.

mod budget;
mod mask;
mod pack;
mod schedule;

pub use budget::{corpus_tokens_for_epochs, estimate_epochs, packed_corpus_tokens, BudgetSpec};
pub use mask::{apply_masking, mask_epoch, MaskedSequence, MaskingPolicy, MaskingVocab, Replacement};
pub use pack::pack_sequences;
pub use schedule::{lr_at, ScheduleKind, ScheduleSpec};
