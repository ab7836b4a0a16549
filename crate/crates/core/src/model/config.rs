use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Published sizes: 2–3 layers of 100 or 300 units per direction,
    /// 512/512/256/128 head, 5 epochs with lr/10 per epoch.
    Paper,
    /// Laptop-scale sizes with early stopping on held-out L1.
    Desk,
}

/// Architecture and optimization settings of the multitask seq2seq model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub preset: Preset,
    pub vocab_size: usize,
    /// Encoder (and decoder) depth `L`.
    pub layers: usize,
    /// Encoder width per direction `d`; the decoder runs at `2d`.
    pub dim: usize,
    /// Word embedding width.
    pub embed_dim: usize,
    /// Hidden widths of the multitask head.
    pub head_hidden: Vec<usize>,
    /// Maximum encoded length including start/end symbols.
    pub max_len: usize,
    /// Weight of the contextual loss: `J = λ·L1 + (1 − λ)·L2`.
    pub lambda: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Learning-rate multiplier applied after every epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Extra checkpoint every N optimizer steps; 0 disables.
    pub checkpoint_every: u64,
    /// Stop after this many epochs without held-out L1 improvement.
    pub early_stopping_patience: Option<usize>,
    /// Fraction of pairs held out for early stopping.
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn paper(vocab_size: usize, layers: usize, dim: usize) -> Self {
        ModelConfig {
            preset: Preset::Paper,
            vocab_size,
            layers,
            dim,
            embed_dim: dim,
            head_hidden: vec![512, 512, 256, 128],
            max_len: crate::corpus::DEFAULT_MAX_LEN,
            lambda: 0.5,
            learning_rate: 0.05,
            momentum: 0.9,
            lr_decay: 0.1,
            epochs: 5,
            batch_size: 32,
            clip_norm: 5.0,
            checkpoint_every: 500,
            early_stopping_patience: None,
            holdout_fraction: 0.0,
            seed: 0,
        }
    }

    pub fn desk(vocab_size: usize) -> Self {
        ModelConfig {
            preset: Preset::Desk,
            vocab_size,
            layers: 2,
            dim: 8,
            embed_dim: 8,
            head_hidden: vec![64; 4],
            max_len: crate::corpus::DEFAULT_MAX_LEN,
            lambda: 0.5,
            learning_rate: 0.08,
            momentum: 0.9,
            lr_decay: 0.99,
            epochs: 50,
            batch_size: 16,
            clip_norm: 5.0,
            checkpoint_every: 0,
            early_stopping_patience: Some(3),
            holdout_fraction: 0.1,
            seed: 0,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        2 * self.layers * self.dim
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn epoch_learning_rate(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(epoch as i32)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if self.layers == 0 || self.dim == 0 || self.embed_dim == 0 {
            return bad("layers, dim and embed_dim must be positive".into());
        }
        if self.preset == Preset::Paper
            && (!matches!(self.layers, 2 | 3) || !matches!(self.dim, 100 | 300))
        {
            return bad(format!(
                "paper preset takes 2 or 3 layers of 100 or 300 units, got {} x {}",
                self.layers, self.dim
            ));
        }
        if self.vocab_size <= crate::corpus::RESERVED.len() {
            return bad(format!("vocabulary of {} has no words", self.vocab_size));
        }
        if self.max_len < 3 {
            return bad("max_len must be at least 3".into());
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) {
            return bad("learning rate and decay must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch size and epochs must be positive".into());
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return bad("holdout fraction must lie in [0, 1)".into());
        }
        Ok(())
    }
}
