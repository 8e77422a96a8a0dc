//! Byte-level BPE: training, encoding, decoding and persistence.

mod alphabet;
mod io;
mod model;
pub mod presplit;
mod trainer;

pub use alphabet::ByteAlphabet;
pub use io::{load, save, TokenizerMetadata, MERGES_FILE, MERGES_HEADER, METADATA_FILE, VOCAB_FILE};
pub use model::{
    Merge, MergeTable, SpecialIds, SpecialTokens, TokenSequence, Tokenizer, Vocabulary, BYTE_OFFSET,
    SPECIAL_IDS,
};
pub use trainer::{
    train, train_from_texts, PretokenCounts, TrainOutcome, TrainerConfig, DEFAULT_MIN_PAIR_FREQUENCY,
};
