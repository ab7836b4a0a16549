//! The multitask conversation model: architecture, training loop,
//! checkpoints and sentence-embedding extraction.

mod checkpoint;
mod config;
mod embed;
mod network;
mod train;

use thiserror::Error;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, F32Tensor, OptimizerSnapshot, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{ModelConfig, Preset};
pub use embed::{
    embed_sentence, embed_session, read_embeddings_binary, write_embeddings_binary,
    write_embeddings_csv, Embedder, SentenceEmbedding,
};
pub use network::{EncodedPair, PairStats, Seq2SeqMtl};
pub use train::{encode_pairs, evaluate, train, CheckpointKind, EpochStats, StepRecord, TrainReport};

use crate::neural::NeuralError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("non-finite loss or gradient at training step {step}")]
    NonFiniteAt { step: u64 },
    #[error("empty {0}")]
    EmptyInput(&'static str),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint format version {found} is not supported (reader supports {supported})")]
    Version { found: u32, supported: u32 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
