use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{CorpusError, Sentence};

const BUNDLED_MISSPELLINGS: &str = include_str!("../../data/misspellings.txt");
const BUNDLED_CONTRACTIONS: &str = include_str!("../../data/contractions.txt");
const BUNDLED_COMMON_WORDS: &str = include_str!("../../data/common_words.txt");

/// Token substitutions applied to every utterance line.
///
/// Proper nouns are detected heuristically: a token that is capitalized,
/// not at the start of a sentence, and not in `common_words` is replaced by
/// `proper_noun_token`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationRules {
    pub misspelling_map: BTreeMap<String, String>,
    pub contraction_map: BTreeMap<String, Vec<String>>,
    pub common_words: BTreeSet<String>,
    pub proper_noun_token: String,
}

impl Default for NormalizationRules {
    fn default() -> Self {
        Self::bundled()
    }
}

impl NormalizationRules {
    /// Rules built from the data files shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_sources(
            ("<bundled misspellings>", BUNDLED_MISSPELLINGS),
            ("<bundled contractions>", BUNDLED_CONTRACTIONS),
            ("<bundled common words>", BUNDLED_COMMON_WORDS),
        )
        .expect("bundled normalization tables are valid")
    }

    /// Empty maps; only lowercasing, punctuation stripping and the proper
    /// noun heuristic (against an empty common-word list) apply.
    pub fn empty() -> Self {
        NormalizationRules {
            misspelling_map: BTreeMap::new(),
            contraction_map: BTreeMap::new(),
            common_words: BTreeSet::new(),
            proper_noun_token: super::NAME.to_string(),
        }
    }

    pub fn from_files(
        misspellings: &Path,
        contractions: &Path,
        common_words: &Path,
    ) -> Result<Self, CorpusError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| CorpusError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let (m, c, w) = (read(misspellings)?, read(contractions)?, read(common_words)?);
        Self::from_sources(
            (&misspellings.display().to_string(), &m),
            (&contractions.display().to_string(), &c),
            (&common_words.display().to_string(), &w),
        )
    }

    fn from_sources(
        misspellings: (&str, &str),
        contractions: (&str, &str),
        common_words: (&str, &str),
    ) -> Result<Self, CorpusError> {
        let mut rules = Self::empty();
        for (line_no, fields) in data_lines(misspellings.1) {
            if fields.len() != 2 {
                return Err(CorpusError::Parse {
                    path: misspellings.0.to_string(),
                    line: line_no,
                    msg: "expected `misspelled correct`".into(),
                });
            }
            rules
                .misspelling_map
                .insert(fields[0].to_lowercase(), fields[1].to_lowercase());
        }
        for (line_no, fields) in data_lines(contractions.1) {
            if fields.len() < 2 {
                return Err(CorpusError::Parse {
                    path: contractions.0.to_string(),
                    line: line_no,
                    msg: "expected `contraction word [word...]`".into(),
                });
            }
            rules.contraction_map.insert(
                fields[0].to_lowercase(),
                fields[1..].iter().map(|w| w.to_lowercase()).collect(),
            );
        }
        for (_, fields) in data_lines(common_words.1) {
            rules
                .common_words
                .extend(fields.iter().map(|w| w.to_lowercase()));
        }
        rules.validate()?;
        Ok(rules)
    }

    pub fn with_misspellings<I, K, V>(mut self, entries: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        for (k, v) in entries {
            self.misspelling_map.insert(k.into(), v.into());
        }
        self.validate()?;
        Ok(self)
    }

    /// Substitution outputs must never be keys themselves, otherwise a
    /// second normalization pass would rewrite them again.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let is_key =
            |w: &str| self.misspelling_map.contains_key(w) || self.contraction_map.contains_key(w);
        for (k, v) in &self.misspelling_map {
            check_lower(k)?;
            check_lower(v)?;
            if is_key(v) {
                return Err(CorpusError::Rules(format!(
                    "misspelling `{k}` maps to `{v}`, which is itself rewritten"
                )));
            }
        }
        for (k, expansion) in &self.contraction_map {
            check_lower(k)?;
            for w in expansion {
                check_lower(w)?;
                if is_key(w) || w.contains('\'') {
                    return Err(CorpusError::Rules(format!(
                        "contraction `{k}` expands to `{w}`, which is itself rewritten"
                    )));
                }
            }
        }
        if self.proper_noun_token.is_empty() {
            return Err(CorpusError::Rules("empty proper noun token".into()));
        }
        Ok(())
    }
}

fn check_lower(w: &str) -> Result<(), CorpusError> {
    if w.is_empty() || w.chars().any(char::is_uppercase) {
        return Err(CorpusError::Rules(format!(
            "table entry `{w}` must be non-empty lowercase"
        )));
    }
    Ok(())
}

fn data_lines(src: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    src.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Normalizes one utterance line into lowercase tokens.
///
/// Punctuation is stripped; apostrophes survive only inside a word (where
/// contraction expansion usually consumes them). An empty result means no
/// token survived and the line should be skipped.
pub fn normalize_text(raw: &str, rules: &NormalizationRules) -> Sentence {
    let mut out: Vec<String> = Vec::new();
    let mut sentence_start = true;

    for chunk in raw.split_whitespace() {
        if chunk == rules.proper_noun_token {
            out.push(chunk.to_string());
            sentence_start = false;
            continue;
        }
        let chunk = chunk.replace(['\u{2019}', '\u{2018}'], "'");
        let mut rest = chunk.as_str();
        while !rest.is_empty() {
            let start = rest.find(is_word_char).unwrap_or(rest.len());
            if rest[..start].contains(['.', '!', '?']) {
                sentence_start = true;
            }
            rest = &rest[start..];
            let end = rest.find(|c: char| !is_word_char(c)).unwrap_or(rest.len());
            let piece = rest[..end].trim_matches('\'');
            rest = &rest[end..];
            if piece.is_empty() {
                continue;
            }
            push_word(piece, sentence_start, rules, &mut out);
            sentence_start = false;
        }
    }
    Sentence { tokens: out }
}

fn push_word(piece: &str, sentence_start: bool, rules: &NormalizationRules, out: &mut Vec<String>) {
    let capitalized = piece.chars().next().is_some_and(char::is_uppercase);
    let lower = piece.to_lowercase();

    if let Some(expansion) = rules.contraction_map.get(&lower) {
        out.extend(expansion.iter().cloned());
        return;
    }
    let word = rules.misspelling_map.get(&lower).cloned().unwrap_or(lower);
    if capitalized && !sentence_start && !rules.common_words.contains(&word) {
        out.push(rules.proper_noun_token.clone());
    } else {
        out.push(word);
    }
}
