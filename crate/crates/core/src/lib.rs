//! Corpus-to-benchmark toolkit for RoBERTa-style encoders: corpus
//! preparation, byte-level BPE, masked-LM data preparation, benchmark
//! loading, evaluation metrics and a grid-search fine-tuning harness.

pub mod bpe;
pub mod corpus;
pub mod data;
pub mod error;
pub mod metrics;
pub mod pretrain;
pub mod rng;
pub mod scalar;
pub mod tune;

pub use error::{Error, Result};
pub use scalar::{FloatScalar, Scalar};

/// Exact rational used where scores must be compared without tolerance.
pub type Exact = num_rational::Ratio<i64>;
