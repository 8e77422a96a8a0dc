//! Benchmark datasets: sentiment TSV, two-column CoNLL NER, and seeded
//! train/validation/test splitting with a cross-split leakage audit.

mod conll;
mod sentiment;
mod split;

pub use conll::{load_conll, save_conll, ConllLoad, TaggedSentence};
pub use sentiment::{
    audit_leakage, load_sentiment, save_sentiment, Collision, LabeledText, LeakageReport, Sentiment,
};
pub use split::{carve_test, carve_validation, write_splits, SplitManifest, SplitSpec};
