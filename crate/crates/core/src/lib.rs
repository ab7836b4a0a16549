//! Sequence-to-sequence conversation model with an online affect multitask
//! objective, sentence-embedding extraction from its encoder, and the
//! downstream session-level evaluation methods that consume those
//! embeddings.
//!
//! Module map:
//!
//! * [`corpus`] normalizes raw dialogue text, pairs consecutive lines and
//!   builds vocabularies; it also generates synthetic corpora.
//! * [`affect`] labels sentences Positive/Negative from a word lexicon.
//! * [`neural`] holds the differentiable building blocks with hand-written
//!   backward passes.
//! * [`model`] assembles the encoder/attention-decoder/multitask network,
//!   trains it, checkpoints it and extracts embeddings.
//! * [`downstream`] evaluates embeddings with k-means, k-NN, a rating
//!   estimator and an emotion classifier under leave-one-group-out CV.

pub mod affect;
pub mod corpus;
pub mod downstream;
pub mod model;
pub mod neural;

/// Crate version, embedded into every artifact the pipeline writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
