use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DownstreamError;
use crate::neural::{Mlp, OptimizerKind, OptimizerState, ParamSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmotionConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for EmotionConfig {
    fn default() -> Self {
        EmotionConfig {
            hidden: vec![32; 4],
            epochs: 20,
            learning_rate: 0.05,
            batch_size: 16,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

/// ReLU feed-forward classifier over embeddings.
#[derive(Debug, Clone)]
pub struct EmotionClassifier {
    pub params: ParamSet,
    pub mlp: Mlp,
}

impl EmotionClassifier {
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, DownstreamError> {
        Ok(self.mlp.forward(&self.params, x)?.probs)
    }

    /// Most probable class; ties go to the lower index.
    pub fn predict(&self, x: &[f64]) -> Result<usize, DownstreamError> {
        let p = self.predict_proba(x)?;
        let mut best = 0;
        for i in 1..p.len() {
            if p[i] > p[best] {
                best = i;
            }
        }
        Ok(best)
    }

    pub fn n_classes(&self) -> usize {
        self.mlp.classes()
    }
}

/// Cross-entropy training with Adagrad. About `validation_fraction` of the
/// items are held out; the epoch with the best validation accuracy (then
/// loss) is kept.
pub fn train_emotion_dnn(
    x: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    cfg: &EmotionConfig,
) -> Result<EmotionClassifier, DownstreamError> {
    if x.is_empty() {
        return Err(DownstreamError::Empty("emotion training set"));
    }
    if x.len() != labels.len() {
        return Err(DownstreamError::Invalid("embeddings and labels differ in length".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(DownstreamError::Invalid(format!("label {bad} >= {n_classes} classes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ParamSet::new();
    let mlp = Mlp::new(&mut params, "emotion", x[0].len(), &cfg.hidden, n_classes, &mut rng);
    let mut clf = EmotionClassifier { params, mlp };

    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.shuffle(&mut rng);
    let n_val = if x.len() >= 10 {
        (x.len() as f64 * cfg.validation_fraction).round() as usize
    } else {
        0
    };
    let (val, train) = idx.split_at(n_val);
    let mut train = train.to_vec();

    let mut opt = OptimizerState::new(OptimizerKind::Adagrad, cfg.learning_rate, &clf.params);
    let mut grads = clf.params.zeros_like();
    let mut best: Option<((usize, f64), ParamSet)> = None;
    for _ in 0..cfg.epochs {
        train.shuffle(&mut rng);
        for batch in train.chunks(cfg.batch_size.max(1)) {
            grads.zero();
            for &i in batch {
                let out = clf.mlp.forward(&clf.params, &x[i])?;
                let mut d = out.probs.clone();
                d[labels[i]] -= 1.0;
                d.iter_mut().for_each(|g| *g /= batch.len() as f64);
                clf.mlp.backward(&clf.params, &mut grads, &out, &d);
            }
            opt.step(&mut clf.params, &grads);
        }
        if !val.is_empty() {
            let (mut correct, mut loss) = (0usize, 0.0);
            for &i in val {
                let p = clf.predict_proba(&x[i])?;
                loss -= p[labels[i]].max(f64::MIN_POSITIVE).ln();
                correct += usize::from(clf.predict(&x[i])? == labels[i]);
            }
            let better = best.as_ref().map_or(true, |((c, l), _)| {
                correct > *c || (correct == *c && loss < *l)
            });
            if better {
                best = Some(((correct, loss), clf.params.clone()));
            }
        }
    }
    if let Some((_, p)) = best {
        clf.params = p;
    }
    Ok(clf)
}
