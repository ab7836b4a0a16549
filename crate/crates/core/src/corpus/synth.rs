//! Template-driven synthetic dialogue and session generators.
//!
//! A latent affect class picks the affect word of each utterance from a
//! positive or negative pool (mostly overlapping the bundled lexicon), while
//! the reply template is a function of the utterance template and shares
//! its noun. Reply prediction is therefore learnable from context alone,
//! and the affect label is learnable from the utterance words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DialoguePair, Sentence};
use crate::affect::AffectLabel;
use crate::downstream::{LabeledSession, SessionTarget};

const UTTERANCES: [&str; 6] = [
    "i think the {N} is {A}",
    "you always make the {N} feel {A}",
    "did you see how {A} that {N} was",
    "we should talk about the {A} {N}",
    "my {N} looks so {A} today",
    "that {N} was really {A} last night",
];

const REPLIES: [&str; 6] = [
    "why do you say the {N} is like that",
    "i do not know what to do with the {N}",
    "yes i saw the {N} yesterday",
    "okay let us talk about the {N} then",
    "your {N} looks the same as always",
    "what happened to the {N} last night",
];

const NOUNS: [&str; 12] = [
    "dog", "house", "car", "dinner", "movie", "garden", "job", "party", "kitchen", "trip", "game",
    "money",
];

const POSITIVE_POOL: [&str; 11] = [
    "love", "nice", "sweet", "cute", "special", "happy", "great", "wonderful", "lovely", "fun",
    "cozy",
];
const NEGATIVE_POOL: [&str; 11] = [
    "hate", "ugly", "hurt", "nasty", "wicked", "sad", "awful", "terrible", "bad", "upset", "gross",
];

/// Emotion classes of the synthetic utterance-level benchmark, in label
/// index order.
pub const EMOTION_CLASSES: [&str; 4] = ["anger", "happiness", "neutral", "sadness"];

const EMOTION_POOLS: [&[&str]; 4] = [
    &["angry", "furious", "mad", "hate", "nasty", "rude"],
    &["happy", "glad", "love", "wonderful", "excited", "joy"],
    &["new", "old", "big", "small", "usual", "same"],
    &["sad", "lonely", "cry", "miserable", "lost", "tired"],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Probability that a pair's latent class is Positive.
    pub pos_fraction: f64,
    /// Probability of appending a second affect word drawn from either pool.
    pub second_affect_prob: f64,
    /// Number of utterance/reply templates in use (1..=6).
    pub n_templates: usize,
    /// Reply equals the utterance (echo corpus).
    pub echo: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            pos_fraction: 0.5,
            second_affect_prob: 0.2,
            n_templates: UTTERANCES.len(),
            echo: false,
        }
    }
}

/// Generated pairs with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub pairs: Vec<DialoguePair>,
    /// Latent affect class of each pair's utterance (Positive/Negative).
    pub classes: Vec<AffectLabel>,
    pub templates: Vec<usize>,
}

fn fill(template: &str, noun: &str, affect: &str) -> Vec<String> {
    template
        .split_whitespace()
        .map(|w| match w {
            "{N}" => noun.to_string(),
            "{A}" => affect.to_string(),
            w => w.to_string(),
        })
        .collect()
}

fn affect_utterance(
    rng: &mut ChaCha8Rng,
    template: usize,
    noun: &str,
    pool: &[&str],
    second_prob: f64,
) -> Sentence {
    let word = pool.choose(rng).expect("non-empty pool");
    let mut tokens = fill(UTTERANCES[template], noun, word);
    if rng.gen_bool(second_prob) {
        let other = if rng.gen_bool(0.5) {
            &POSITIVE_POOL[..]
        } else {
            &NEGATIVE_POOL[..]
        };
        tokens.push("and".into());
        tokens.push(other.choose(rng).expect("non-empty pool").to_string());
    }
    Sentence { tokens }
}

fn class_pool(class: AffectLabel) -> &'static [&'static str] {
    match class {
        AffectLabel::Positive => &POSITIVE_POOL,
        _ => &NEGATIVE_POOL,
    }
}

/// Deterministic for a fixed seed. `n_pairs == 0` yields an empty corpus.
pub fn generate_synthetic_corpus(seed: u64, n_pairs: usize, cfg: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_templates = cfg.n_templates.clamp(1, UTTERANCES.len());
    let mut out = SynthCorpus {
        pairs: Vec::with_capacity(n_pairs),
        classes: Vec::with_capacity(n_pairs),
        templates: Vec::with_capacity(n_pairs),
    };
    for _ in 0..n_pairs {
        let class = if rng.gen_bool(cfg.pos_fraction) {
            AffectLabel::Positive
        } else {
            AffectLabel::Negative
        };
        let template = rng.gen_range(0..n_templates);
        let noun = NOUNS.choose(&mut rng).expect("non-empty pool");
        let x = affect_utterance(
            &mut rng,
            template,
            noun,
            class_pool(class),
            cfg.second_affect_prob,
        );
        let y = if cfg.echo {
            x.clone()
        } else {
            Sentence {
                tokens: fill(REPLIES[template], noun, ""),
            }
        };
        out.pairs.push(DialoguePair::new(x, y));
        out.classes.push(class);
        out.templates.push(template);
    }
    out
}

/// Session-level benchmark configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionGenConfig {
    pub n_groups: usize,
    pub sessions_per_group: usize,
    pub sentences_per_session: usize,
    /// Probability that a sentence's affect agrees with its session class.
    pub affect_agreement: f64,
    /// Behaviors to rate. Even-indexed behaviors are rated high for class-1
    /// sessions, odd-indexed ones high for class-0 sessions.
    pub behaviors: Vec<String>,
    pub second_affect_prob: f64,
}

impl Default for SessionGenConfig {
    fn default() -> Self {
        SessionGenConfig {
            n_groups: 10,
            sessions_per_group: 10,
            sentences_per_session: 10,
            affect_agreement: 0.75,
            behaviors: vec!["positivity".into(), "negativity".into()],
            second_affect_prob: 0.2,
        }
    }
}

/// Sessions whose hidden binary class drives both the behavior ratings and
/// the affect of their sentences. Returns sessions and their classes.
pub fn generate_sessions(seed: u64, cfg: &SessionGenConfig) -> (Vec<LabeledSession>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sessions = Vec::new();
    let mut classes = Vec::new();
    for g in 0..cfg.n_groups {
        for s in 0..cfg.sessions_per_group {
            // alternate classes inside a group, rotating the start per group
            let class = ((s + g) % 2) as u8;
            let sentences = (0..cfg.sentences_per_session)
                .map(|_| {
                    let agrees = rng.gen_bool(cfg.affect_agreement);
                    let positive = (class == 1) == agrees;
                    let pool = if positive {
                        &POSITIVE_POOL[..]
                    } else {
                        &NEGATIVE_POOL[..]
                    };
                    let template = rng.gen_range(0..UTTERANCES.len());
                    let noun = NOUNS.choose(&mut rng).expect("non-empty pool");
                    affect_utterance(&mut rng, template, noun, pool, cfg.second_affect_prob)
                        .to_string()
                })
                .collect();
            let ratings = cfg
                .behaviors
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let high = (class == 1) == (j % 2 == 0);
                    let base = if high { 6.0 } else { 1.0 };
                    (name.clone(), base + 3.0 * rng.gen::<f64>())
                })
                .collect();
            sessions.push(LabeledSession {
                session_id: format!("g{g:02}s{s:02}"),
                group_id: format!("g{g:02}"),
                sentences,
                target: SessionTarget::Ratings(ratings),
            });
            classes.push(class);
        }
    }
    (sessions, classes)
}

/// Single-utterance sessions labeled with one of [`EMOTION_CLASSES`],
/// grouped into `n_groups` speaker pairs.
pub fn generate_emotion_sessions(
    seed: u64,
    n_groups: usize,
    per_group: usize,
) -> Vec<LabeledSession> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sessions = Vec::new();
    for g in 0..n_groups {
        for i in 0..per_group {
            let class = i % EMOTION_CLASSES.len();
            let template = rng.gen_range(0..UTTERANCES.len());
            let noun = NOUNS.choose(&mut rng).expect("non-empty pool");
            let sentence = affect_utterance(&mut rng, template, noun, EMOTION_POOLS[class], 0.0);
            sessions.push(LabeledSession {
                session_id: format!("p{g}u{i:04}"),
                group_id: format!("p{g}"),
                sentences: vec![sentence.to_string()],
                target: SessionTarget::Emotion(EMOTION_CLASSES[class].to_string()),
            });
        }
    }
    sessions
}
