use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::network::{EncodedPair, PairStats, Seq2SeqMtl};
use super::{ModelConfig, ModelError};
use crate::affect::{AffectLabel, AffectLexicon};
use crate::corpus::{encode, DialoguePair, Vocabulary};
use crate::neural::{clip_global_norm, OptimizerKind, OptimizerState};

/// Loss summary after an epoch (epoch 0 is the untrained model).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub steps: u64,
    /// Token-mean contextual loss over the training pairs.
    pub l1: f64,
    /// Masked-mean multitask loss over the training pairs.
    pub l2: f64,
    pub j: f64,
    /// Multitask head accuracy on labeled training pairs.
    pub head_accuracy: f64,
    pub heldout_l1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub l1: f64,
    pub l2: f64,
    pub j: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub initial: EpochStats,
    pub epochs: Vec<EpochStats>,
    pub steps: Vec<StepRecord>,
    pub stopped_early: bool,
    /// Majority-class share among labeled training pairs.
    pub majority_baseline: f64,
}

/// Encodes pairs for training. Pairs that already carry `b` keep it;
/// otherwise the label comes from `lexicon` (online labeling), or is
/// Unlabeled when no lexicon is given.
pub fn encode_pairs(
    pairs: &[DialoguePair],
    vocab: &Vocabulary,
    max_len: usize,
    lexicon: Option<&AffectLexicon>,
) -> Vec<EncodedPair> {
    pairs
        .iter()
        .filter(|p| !p.x.is_empty() && !p.y.is_empty())
        .map(|p| EncodedPair {
            x: encode(&p.x, vocab, max_len),
            y: encode(&p.y, vocab, max_len),
            label: p
                .b
                .or_else(|| lexicon.map(|l| l.label(&p.x)))
                .unwrap_or(AffectLabel::Unlabeled),
        })
        .collect()
}

/// Forward-only statistics of `model` over `data`.
pub fn evaluate(model: &Seq2SeqMtl, data: &[EncodedPair]) -> Result<PairStats, ModelError> {
    let mut total = PairStats::default();
    for pair in data {
        total.add(&model.forward_backward(pair, None, 0.0, 0.0)?);
    }
    Ok(total)
}

fn epoch_stats(cfg: &ModelConfig, epoch: usize, lr: f64, steps: u64, s: &PairStats) -> EpochStats {
    EpochStats {
        epoch,
        learning_rate: lr,
        steps,
        l1: s.l1(),
        l2: s.l2(),
        j: cfg.lambda * s.l1() + (1.0 - cfg.lambda) * s.l2(),
        head_accuracy: s.head_accuracy(),
        heldout_l1: None,
    }
}

fn at_step(e: ModelError, step: u64) -> ModelError {
    match e {
        ModelError::NonFinite(_) | ModelError::Neural(crate::neural::NeuralError::NonFinite(_)) => {
            ModelError::NonFiniteAt { step }
        }
        e => e,
    }
}

/// Splits off the held-out set used for early stopping.
fn split_holdout(cfg: &ModelConfig, data: &[EncodedPair]) -> (Vec<EncodedPair>, Vec<EncodedPair>) {
    let n_hold = match cfg.early_stopping_patience {
        Some(_) if cfg.holdout_fraction > 0.0 && data.len() >= 2 => {
            ((data.len() as f64 * cfg.holdout_fraction).ceil() as usize).min(data.len() - 1)
        }
        _ => 0,
    };
    if n_hold == 0 {
        return (data.to_vec(), Vec::new());
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x686f_6c64));
    let (hold, train) = idx.split_at(n_hold);
    let mut train = train.to_vec();
    train.sort_unstable();
    let mut hold = hold.to_vec();
    hold.sort_unstable();
    (
        train.iter().map(|&i| data[i].clone()).collect(),
        hold.iter().map(|&i| data[i].clone()).collect(),
    )
}

/// Why a snapshot was taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointKind {
    EpochEnd,
    /// Every `checkpoint_every` optimizer steps.
    Periodic,
}

/// Trains with momentum SGD on `J = λ·L1 + (1 − λ)·L2`, the learning rate
/// multiplied by `lr_decay` after each epoch. `on_checkpoint` receives a
/// snapshot after every epoch and every `checkpoint_every` steps.
pub fn train<F>(
    config: &ModelConfig,
    vocab: &Vocabulary,
    data: &[EncodedPair],
    mut on_checkpoint: F,
) -> Result<TrainReport, ModelError>
where
    F: FnMut(&Checkpoint, CheckpointKind) -> Result<(), ModelError>,
{
    config.validate()?;
    if config.vocab_size != vocab.len() {
        return Err(ModelError::Config(format!(
            "config vocabulary size {} differs from vocabulary of {}",
            config.vocab_size,
            vocab.len()
        )));
    }
    if data.is_empty() {
        return Err(ModelError::Config("no training pairs".into()));
    }
    let (train_set, holdout) = split_holdout(config, data);
    let mut model = Seq2SeqMtl::new(config.clone())?;
    let mut opt = OptimizerState::new(
        OptimizerKind::SgdMomentum {
            momentum: config.momentum,
        },
        config.learning_rate,
        &model.params,
    );
    let lambda = config.lambda;

    let labeled: Vec<usize> = train_set.iter().filter_map(|p| p.label.class_index()).collect();
    let pos = labeled.iter().filter(|&&c| c == 1).count();
    let majority_baseline = if labeled.is_empty() {
        0.0
    } else {
        pos.max(labeled.len() - pos) as f64 / labeled.len() as f64
    };

    let mut initial = epoch_stats(config, 0, config.learning_rate, 0, &evaluate(&model, &train_set)?);
    if !holdout.is_empty() {
        initial.heldout_l1 = Some(evaluate(&model, &holdout)?.l1());
    }
    let mut report = TrainReport {
        initial,
        epochs: Vec::new(),
        steps: Vec::new(),
        stopped_early: false,
        majority_baseline,
    };
    let mut grads = model.params.zeros_like();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best_heldout = initial.heldout_l1.unwrap_or(f64::INFINITY);
    let mut stale = 0usize;

    for epoch in 0..config.epochs {
        opt.lr = config.epoch_learning_rate(epoch);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64 + 1));
        order.shuffle(&mut shuffle_rng);

        for batch in order.chunks(config.batch_size) {
            let tokens: usize = batch.iter().map(|&i| train_set[i].y.len() - 1).sum();
            let n_labeled = batch
                .iter()
                .filter(|&&i| train_set[i].label.class_index().is_some())
                .count();
            let nll_scale = lambda / tokens as f64;
            let head_scale = if n_labeled == 0 {
                0.0
            } else {
                (1.0 - lambda) / n_labeled as f64
            };

            grads.zero();
            let mut stats = PairStats::default();
            for &i in batch {
                let s = model
                    .forward_backward(&train_set[i], Some(&mut grads), nll_scale, head_scale)
                    .map_err(|e| at_step(e, opt.step + 1))?;
                stats.add(&s);
            }
            if !grads.is_finite() {
                return Err(ModelError::NonFiniteAt { step: opt.step + 1 });
            }
            let grad_norm = clip_global_norm(&mut grads, config.clip_norm);
            opt.step(&mut model.params, &grads);
            let (l1, l2) = (stats.l1(), stats.l2());
            report.steps.push(StepRecord {
                step: opt.step,
                epoch: epoch + 1,
                l1,
                l2,
                j: lambda * l1 + (1.0 - lambda) * l2,
                grad_norm,
            });
            if config.checkpoint_every > 0 && opt.step % config.checkpoint_every == 0 {
                on_checkpoint(&Checkpoint::snapshot(
                    &model,
                    &opt,
                    vocab,
                    epoch,
                    &report.epochs,
                    ),
                    CheckpointKind::Periodic,
                )?;
            }
        }

        let mut stats = epoch_stats(
            config,
            epoch + 1,
            opt.lr,
            opt.step,
            &evaluate(&model, &train_set).map_err(|e| at_step(e, opt.step))?,
        );
        if !holdout.is_empty() {
            stats.heldout_l1 = Some(evaluate(&model, &holdout).map_err(|e| at_step(e, opt.step))?.l1());
        }
        log::info!(
            "epoch {} lr {:.2e} L1 {:.4} L2 {:.4} head acc {:.3}",
            epoch + 1,
            opt.lr,
            stats.l1,
            stats.l2,
            stats.head_accuracy
        );
        report.epochs.push(stats);
        on_checkpoint(&Checkpoint::snapshot(
            &model,
            &opt,
            vocab,
            epoch + 1,
            &report.epochs,
            ),
            CheckpointKind::EpochEnd,
        )?;

        if let (Some(patience), Some(h)) = (config.early_stopping_patience, stats.heldout_l1) {
            if h < best_heldout {
                best_heldout = h;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    report.stopped_early = true;
                    break;
                }
            }
        }
    }
    Ok(report)
}
