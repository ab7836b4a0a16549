use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::{CorpusError, DialoguePair, Sentence};

pub const PAD: u32 = 0;
pub const SOS: u32 = 1;
pub const EOS: u32 = 2;
pub const UNK: u32 = 3;
pub const NAME: &str = "<name>";

/// Reserved symbols, in id order.
pub const RESERVED: [&str; 5] = ["<pad>", "<sos>", "<eos>", "<unk>", NAME];

/// Bijective word <-> id table. Ids 0..5 are the reserved symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::reserved_only()
    }
}

impl Vocabulary {
    pub fn reserved_only() -> Self {
        let mut v = Vocabulary {
            words: Vec::new(),
            counts: Vec::new(),
            index: HashMap::new(),
        };
        for w in RESERVED {
            v.push(w.to_string(), 0);
        }
        v
    }

    /// Builds a vocabulary from `(word, count)` entries in id order,
    /// following the reserved block. Duplicates and reserved words are
    /// rejected.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, u64)>,
    ) -> Result<Self, CorpusError> {
        let mut v = Self::reserved_only();
        for (word, count) in entries {
            if v.index.contains_key(&word) || word.chars().any(char::is_whitespace) || word.is_empty()
            {
                return Err(CorpusError::Rules(format!(
                    "vocabulary word `{word}` is duplicated, reserved or malformed"
                )));
            }
            v.push(word, count);
        }
        Ok(v)
    }

    fn push(&mut self, word: String, count: u64) {
        self.index.insert(word.clone(), self.words.len() as u32);
        self.words.push(word);
        self.counts.push(count);
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn id_or_unk(&self, word: &str) -> u32 {
        self.id(word).unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn count(&self, id: u32) -> Option<u64> {
        self.counts.get(id as usize).copied()
    }

    /// Non-reserved words in id order.
    pub fn words(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words
            .iter()
            .zip(&self.counts)
            .skip(RESERVED.len())
            .map(|(w, &c)| (w.as_str(), c))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Maps ids back to words, dropping pad/sos/eos framing.
    pub fn decode(&self, ids: &[u32]) -> Sentence {
        Sentence::new(
            ids.iter()
                .filter(|&&id| id != PAD && id != SOS && id != EOS)
                .map(|&id| self.word(id).unwrap_or(RESERVED[UNK as usize]).to_string()),
        )
    }

    /// Writes `word count` lines for the non-reserved words in id order.
    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
        for (w, c) in self.words() {
            writeln!(out, "{w} {c}").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let io_err = |source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        };
        let reader = BufReader::new(std::fs::File::open(path).map_err(io_err)?);
        let mut entries = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: &str| CorpusError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let (word, count) = line
                .rsplit_once(' ')
                .ok_or_else(|| parse_err("expected `word count`"))?;
            let count = count
                .parse::<u64>()
                .map_err(|_| parse_err("count is not an integer"))?;
            entries.push((word.to_string(), count));
        }
        Self::from_entries(entries)
    }
}

/// Keeps the `max_size - 5` most frequent words with at least `min_count`
/// occurrences over both sides of every pair. Ties are broken
/// lexicographically.
pub fn build_vocab(
    pairs: &[DialoguePair],
    max_size: usize,
    min_count: u64,
) -> Result<Vocabulary, CorpusError> {
    if max_size <= RESERVED.len() {
        return Err(CorpusError::Rules(format!(
            "max vocabulary size {max_size} leaves no room beyond the {} reserved symbols",
            RESERVED.len()
        )));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for p in pairs {
        for w in p.x.tokens.iter().chain(&p.y.tokens) {
            *counts.entry(w.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(w, c)| c >= min_count && !RESERVED.contains(&w))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED.len());
    Vocabulary::from_entries(ranked.into_iter().map(|(w, c)| (w.to_string(), c)))
}

/// Frames a sentence as `[SOS, w.., EOS]`, truncated to `max_len` ids with
/// EOS kept last. Out-of-vocabulary words map to UNK.
pub fn encode(sentence: &Sentence, vocab: &Vocabulary, max_len: usize) -> Vec<u32> {
    assert!(max_len >= 3, "max_len must leave room for at least one word");
    let mut ids = Vec::with_capacity(max_len.min(sentence.len() + 2));
    ids.push(SOS);
    ids.extend(
        sentence
            .tokens
            .iter()
            .take(max_len - 2)
            .map(|w| vocab.id_or_unk(w)),
    );
    ids.push(EOS);
    ids
}
