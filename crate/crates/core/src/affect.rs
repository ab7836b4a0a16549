//! Online affect labels from a positive/negative word lexicon.
//!
//! A sentence is Positive or Negative when one category's words occur
//! more often than the other's (counted with multiplicity); ties,
//! including sentences with no affect words, are Unlabeled and are masked
//! out of the multitask loss.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DialoguePair, Sentence};

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: word `{word}` appears outside a [positive]/[negative] section")]
    NoSection { line: usize, word: String },
    #[error("line {line}: unknown section `{name}`")]
    UnknownSection { line: usize, name: String },
    #[error("word `{0}` is listed as both positive and negative")]
    BothCategories(String),
    #[error("the {0} category is empty")]
    EmptyCategory(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AffectLabel {
    Positive,
    Negative,
    Unlabeled,
}

impl AffectLabel {
    /// Class index used by the two-way multitask head; `None` for
    /// Unlabeled.
    pub fn class_index(self) -> Option<usize> {
        match self {
            AffectLabel::Negative => Some(0),
            AffectLabel::Positive => Some(1),
            AffectLabel::Unlabeled => None,
        }
    }

    pub fn from_class_index(i: usize) -> Self {
        if i == 0 {
            AffectLabel::Negative
        } else {
            AffectLabel::Positive
        }
    }
}

impl fmt::Display for AffectLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AffectLabel::Positive => "positive",
            AffectLabel::Negative => "negative",
            AffectLabel::Unlabeled => "unlabeled",
        })
    }
}

impl FromStr for AffectLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(AffectLabel::Positive),
            "negative" => Ok(AffectLabel::Negative),
            "unlabeled" => Ok(AffectLabel::Unlabeled),
            other => Err(format!("unknown affect label `{other}`")),
        }
    }
}

/// Disjoint, non-empty positive and negative word sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffectLexicon {
    positive: BTreeSet<String>,
    negative: BTreeSet<String>,
}

impl AffectLexicon {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Result<Self, LexiconError>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let positive: BTreeSet<String> = positive
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        let negative: BTreeSet<String> = negative
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        if let Some(w) = positive.intersection(&negative).next() {
            return Err(LexiconError::BothCategories(w.clone()));
        }
        if positive.is_empty() {
            return Err(LexiconError::EmptyCategory("positive"));
        }
        if negative.is_empty() {
            return Err(LexiconError::EmptyCategory("negative"));
        }
        Ok(AffectLexicon { positive, negative })
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    /// Parses `[positive]` / `[negative]` sections, one word per line,
    /// `#` starting a comment.
    pub fn parse(src: &str) -> Result<Self, LexiconError> {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        let mut section: Option<&mut Vec<String>> = None;
        for (i, line) in src.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim().to_ascii_lowercase().as_str() {
                    "positive" => Some(&mut positive),
                    "negative" => Some(&mut negative),
                    _ => {
                        return Err(LexiconError::UnknownSection {
                            line: i + 1,
                            name: name.to_string(),
                        })
                    }
                };
                continue;
            }
            match section.as_deref_mut() {
                Some(words) => words.push(line.to_string()),
                None => {
                    return Err(LexiconError::NoSection {
                        line: i + 1,
                        word: line.to_string(),
                    })
                }
            }
        }
        Self::new(positive, negative)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let src = std::fs::read_to_string(path).map_err(|e| LexiconError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::parse(&src)
    }

    pub fn positive(&self) -> &BTreeSet<String> {
        &self.positive
    }

    pub fn negative(&self) -> &BTreeSet<String> {
        &self.negative
    }

    /// The same lexicon with categories exchanged.
    pub fn swapped(&self) -> Self {
        AffectLexicon {
            positive: self.negative.clone(),
            negative: self.positive.clone(),
        }
    }

    pub fn label(&self, sentence: &Sentence) -> AffectLabel {
        label_sentence(sentence, self)
    }
}

pub fn load_lexicon(path: &Path) -> Result<AffectLexicon, LexiconError> {
    AffectLexicon::load(path)
}

pub fn label_sentence(sentence: &Sentence, lexicon: &AffectLexicon) -> AffectLabel {
    let (mut pos, mut neg) = (0usize, 0usize);
    for t in &sentence.tokens {
        if lexicon.positive.contains(t) {
            pos += 1;
        } else if lexicon.negative.contains(t) {
            neg += 1;
        }
    }
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => AffectLabel::Positive,
        std::cmp::Ordering::Less => AffectLabel::Negative,
        std::cmp::Ordering::Equal => AffectLabel::Unlabeled,
    }
}

/// Labels pairs lazily from their utterance side; usable inline while
/// batching.
pub fn label_stream<'a, I>(pairs: I, lexicon: &'a AffectLexicon) -> impl Iterator<Item = DialoguePair> + 'a
where
    I: IntoIterator<Item = DialoguePair>,
    I::IntoIter: 'a,
{
    pairs.into_iter().map(move |mut p| {
        p.b = Some(label_sentence(&p.x, lexicon));
        p
    })
}

/// Sets `b = label_sentence(x)` on every pair.
pub fn augment_dataset(pairs: Vec<DialoguePair>, lexicon: &AffectLexicon) -> Vec<DialoguePair> {
    label_stream(pairs, lexicon).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub total: usize,
    pub positive: usize,
    pub negative: usize,
    pub unlabeled: usize,
    pub positive_fraction: f64,
    pub negative_fraction: f64,
    pub unlabeled_fraction: f64,
}

impl LabelStats {
    pub fn from_labels(labels: impl IntoIterator<Item = AffectLabel>) -> Self {
        let mut s = LabelStats::default();
        for l in labels {
            s.total += 1;
            match l {
                AffectLabel::Positive => s.positive += 1,
                AffectLabel::Negative => s.negative += 1,
                AffectLabel::Unlabeled => s.unlabeled += 1,
            }
        }
        if s.total > 0 {
            let n = s.total as f64;
            s.positive_fraction = s.positive as f64 / n;
            s.negative_fraction = s.negative as f64 / n;
            s.unlabeled_fraction = s.unlabeled as f64 / n;
        }
        s
    }

    /// Pairs without a label count as Unlabeled.
    pub fn from_pairs(pairs: &[DialoguePair]) -> Self {
        Self::from_labels(pairs.iter().map(|p| p.b.unwrap_or(AffectLabel::Unlabeled)))
    }
}
