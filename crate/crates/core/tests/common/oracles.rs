//! Reference implementations written independently of the library code
//! they check.

use mtl_embed::affect::{AffectLabel, AffectLexicon};
use mtl_embed::corpus::Sentence;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Scans every token against every lexicon word.
pub fn brute_force_label(sentence: &Sentence, lexicon: &AffectLexicon) -> AffectLabel {
    let mut pos = 0usize;
    let mut neg = 0usize;
    for token in &sentence.tokens {
        for w in lexicon.positive() {
            if token == w {
                pos += 1;
            }
        }
        for w in lexicon.negative() {
            if token == w {
                neg += 1;
            }
        }
    }
    if pos > neg {
        AffectLabel::Positive
    } else if neg > pos {
        AffectLabel::Negative
    } else {
        AffectLabel::Unlabeled
    }
}

const FILLER: [&str; 12] = [
    "the", "a", "dog", "i", "you", "went", "home", "today", "not", "very", "what", "lovelyish",
];

/// 0–11 tokens mixing lexicon words of both polarities with filler.
pub fn random_sentence(rng: &mut ChaCha8Rng, lexicon: &AffectLexicon) -> Sentence {
    let pos: Vec<&String> = lexicon.positive().iter().collect();
    let neg: Vec<&String> = lexicon.negative().iter().collect();
    let n = rng.gen_range(0..12);
    Sentence::new((0..n).map(|_| match rng.gen_range(0..4) {
        0 => pos.choose(rng).unwrap().to_string(),
        1 => neg.choose(rng).unwrap().to_string(),
        _ => FILLER.choose(rng).unwrap().to_string(),
    }))
}

/// All-pairs oracle: sort every training point by (distance, index).
pub fn brute_force_knn(points: &[Vec<f64>], labels: &[usize], x: &[f64], k: usize) -> usize {
    let mut d: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = [0usize; 8];
    for &(_, i) in &d[..k] {
        votes[labels[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}
