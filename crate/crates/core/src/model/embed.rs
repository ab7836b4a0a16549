use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::network::Seq2SeqMtl;
use super::ModelError;
use crate::corpus::{encode, normalize_text, NormalizationRules, Sentence, Vocabulary};

/// Concatenated final forward/backward encoder states of every layer,
/// `2·L·d` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEmbedding {
    pub sentence: String,
    pub values: Vec<f64>,
}

/// Read-only encoder view of a checkpoint. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Embedder {
    model: Seq2SeqMtl,
    vocab: Vocabulary,
    rules: NormalizationRules,
}

impl Embedder {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, ModelError> {
        Ok(Embedder {
            model: ckpt.model()?,
            vocab: ckpt.vocab.clone(),
            rules: NormalizationRules::bundled(),
        })
    }

    pub fn with_rules(mut self, rules: NormalizationRules) -> Self {
        self.rules = rules;
        self
    }

    pub fn dim(&self) -> usize {
        self.model.config.embedding_dim()
    }

    pub fn model(&self) -> &Seq2SeqMtl {
        &self.model
    }

    /// Runs only the embedding lookup and the encoder.
    pub fn embed_sentence(&self, sentence: &Sentence) -> Result<SentenceEmbedding, ModelError> {
        if sentence.is_empty() {
            return Err(ModelError::EmptyInput("sentence"));
        }
        let ids = encode(sentence, &self.vocab, self.model.config.max_len);
        let values = self.model.embed_ids(&ids)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("embedding".into()));
        }
        Ok(SentenceEmbedding {
            sentence: sentence.to_string(),
            values,
        })
    }

    /// Normalizes raw text first.
    pub fn embed_text(&self, raw: &str) -> Result<SentenceEmbedding, ModelError> {
        self.embed_sentence(&normalize_text(raw, &self.rules))
    }

    /// Embeds sentences independently (in parallel), preserving order.
    pub fn embed_batch(&self, sentences: &[Sentence]) -> Result<Vec<SentenceEmbedding>, ModelError> {
        sentences
            .par_iter()
            .map(|s| self.embed_sentence(s))
            .collect()
    }

    /// Embeds the sentences of a session in order. Lines that normalize to
    /// nothing are skipped; a session with no usable line is an error.
    pub fn embed_session<S: AsRef<str>>(&self, sentences: &[S]) -> Result<Vec<SentenceEmbedding>, ModelError> {
        let normalized: Vec<Sentence> = sentences
            .iter()
            .map(|s| normalize_text(s.as_ref(), &self.rules))
            .filter(|s| !s.is_empty())
            .collect();
        if normalized.is_empty() {
            return Err(ModelError::EmptyInput("session"));
        }
        normalized.iter().map(|s| self.embed_sentence(s)).collect()
    }
}

pub fn embed_sentence(ckpt: &Checkpoint, sentence: &Sentence) -> Result<SentenceEmbedding, ModelError> {
    Embedder::from_checkpoint(ckpt)?.embed_sentence(sentence)
}

pub fn embed_session<S: AsRef<str>>(
    ckpt: &Checkpoint,
    sentences: &[S],
) -> Result<Vec<SentenceEmbedding>, ModelError> {
    Embedder::from_checkpoint(ckpt)?.embed_session(sentences)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ModelError + '_ {
    move |source| ModelError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Binary matrix: `u64 count`, `u64 dim`, then `count·dim` little-endian
/// `f32` values, row-major.
pub fn write_embeddings_binary(path: &Path, embeddings: &[SentenceEmbedding]) -> Result<(), ModelError> {
    let dim = embeddings.first().map_or(0, |e| e.values.len());
    if embeddings.iter().any(|e| e.values.len() != dim) {
        return Err(ModelError::Format("embeddings of mixed dimension".into()));
    }
    let mut out = Vec::with_capacity(16 + 4 * dim * embeddings.len());
    out.extend_from_slice(&(embeddings.len() as u64).to_le_bytes());
    out.extend_from_slice(&(dim as u64).to_le_bytes());
    for e in embeddings {
        for &v in &e.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(io_err(path))
}

pub fn read_embeddings_binary(path: &Path) -> Result<(usize, Vec<Vec<f32>>), ModelError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let bad = || ModelError::Format(format!("{} is not an embedding matrix", path.display()));
    if bytes.len() < 16 {
        return Err(bad());
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if bytes.len() != 16 + 4 * count * dim {
        return Err(bad());
    }
    let values: Vec<f32> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((dim, values.chunks(dim.max(1)).map(<[f32]>::to_vec).collect()))
}

/// One row per embedding, comma-separated values.
pub fn write_embeddings_csv(path: &Path, embeddings: &[SentenceEmbedding]) -> Result<(), ModelError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    for e in embeddings {
        let row: Vec<String> = e.values.iter().map(|v| format!("{}", *v as f32)).collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}
