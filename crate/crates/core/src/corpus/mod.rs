//! Dialogue corpus ingestion: normalization, consecutive-line pairing,
//! vocabulary construction, id encoding and synthetic corpora.

mod io;
mod normalize;
mod pairing;
mod synth;
mod vocab;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::AffectLabel;

pub use io::{read_documents, read_pairs, write_pairs};
pub use normalize::{normalize_text, NormalizationRules};
pub use pairing::pair_consecutive;
pub use synth::{
    generate_emotion_sessions, generate_sessions, generate_synthetic_corpus, SessionGenConfig,
    SynthConfig, SynthCorpus, EMOTION_CLASSES,
};
pub use vocab::{build_vocab, encode, Vocabulary, EOS, NAME, PAD, RESERVED, SOS, UNK};

/// Default maximum encoded sentence length, framing symbols included.
pub const DEFAULT_MAX_LEN: usize = 30;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid normalization rules: {0}")]
    Rules(String),
}

/// A normalized sentence: lowercase word tokens and reserved symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sentence {
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Sentence {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses a space-separated, already normalized sentence.
    pub fn from_normalized(line: &str) -> Self {
        Sentence::new(line.split_whitespace())
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

/// An (utterance, reply) pair; `b` is set once the pair has been
/// augmented with an affect label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialoguePair {
    pub x: Sentence,
    pub y: Sentence,
    pub b: Option<AffectLabel>,
}

impl DialoguePair {
    pub fn new(x: Sentence, y: Sentence) -> Self {
        DialoguePair { x, y, b: None }
    }
}
