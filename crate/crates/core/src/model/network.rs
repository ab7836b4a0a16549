use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError};
use crate::affect::AffectLabel;
use crate::neural::{
    label_cross_entropy, seq_cross_entropy, BiGruOutput, BiGruStack, Decoder, Embedding, Grads,
    LayerFinal, Mlp, ParamId, ParamSet,
};

/// Encoder, attention decoder and multitask head over one parameter set.
///
/// The head reads the same vector that is exported as the sentence
/// embedding: the concatenated final forward/backward states of every
/// encoder layer.
#[derive(Debug, Clone)]
pub struct Seq2SeqMtl {
    pub config: ModelConfig,
    pub params: ParamSet,
    pub embedding: Embedding,
    pub encoder: BiGruStack,
    pub decoder: Decoder,
    pub head: Mlp,
}

/// Loss statistics of one pair (or a sum over several).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairStats {
    /// Summed target-token negative log-likelihood.
    pub nll_sum: f64,
    pub tokens: usize,
    /// Summed head cross-entropy over labeled items.
    pub head_loss_sum: f64,
    pub labeled: usize,
    pub head_correct: usize,
}

impl PairStats {
    pub fn add(&mut self, o: &PairStats) {
        self.nll_sum += o.nll_sum;
        self.tokens += o.tokens;
        self.head_loss_sum += o.head_loss_sum;
        self.labeled += o.labeled;
        self.head_correct += o.head_correct;
    }

    /// Token-mean contextual loss.
    pub fn l1(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.nll_sum / self.tokens as f64
        }
    }

    /// Masked mean multitask loss.
    pub fn l2(&self) -> f64 {
        if self.labeled == 0 {
            0.0
        } else {
            self.head_loss_sum / self.labeled as f64
        }
    }

    pub fn head_accuracy(&self) -> f64 {
        if self.labeled == 0 {
            0.0
        } else {
            self.head_correct as f64 / self.labeled as f64
        }
    }
}

/// One encoded training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub x: Vec<u32>,
    /// Framed reply `[SOS, …, EOS]`; decoder inputs are `y[..n-1]`, targets
    /// `y[1..]`.
    pub y: Vec<u32>,
    pub label: AffectLabel,
}

impl Seq2SeqMtl {
    /// Fresh model with seeded uniform initialization.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut ps = ParamSet::new();
        let embedding = Embedding::new(&mut ps, "embed", config.vocab_size, config.embed_dim, &mut rng);
        let encoder = BiGruStack::new(
            &mut ps,
            "encoder",
            config.embed_dim,
            config.dim,
            config.layers,
            &mut rng,
        );
        let decoder = Decoder::new(
            &mut ps,
            "decoder",
            config.embed_dim,
            config.dim,
            config.layers,
            config.vocab_size,
            &mut rng,
        );
        let head = Mlp::new(
            &mut ps,
            "head",
            config.embedding_dim(),
            &config.head_hidden,
            2,
            &mut rng,
        );
        Ok(Seq2SeqMtl {
            config,
            params: ps,
            embedding,
            encoder,
            decoder,
            head,
        })
    }

    /// Rebuilds the architecture for `config` and installs `params`, which
    /// must match it name-for-name and shape-for-shape.
    pub fn with_params(config: ModelConfig, params: ParamSet) -> Result<Self, ModelError> {
        let mut model = Self::new(config)?;
        if params.len() != model.params.len() {
            return Err(ModelError::Format(format!(
                "expected {} parameter tensors, found {}",
                model.params.len(),
                params.len()
            )));
        }
        for ((_, name_a, a), (_, name_b, b)) in model.params.iter().zip(params.iter()) {
            if name_a != name_b || a.shape() != b.shape() {
                return Err(ModelError::Format(format!(
                    "parameter `{name_b}` {:?} does not match `{name_a}` {:?}",
                    b.shape(),
                    a.shape()
                )));
            }
        }
        model.params = params;
        Ok(model)
    }

    pub fn head_params(&self) -> Vec<ParamId> {
        self.head.params()
    }

    pub fn decoder_params(&self) -> Vec<ParamId> {
        self.decoder.params()
    }

    pub fn encoder_params(&self) -> Vec<ParamId> {
        self.encoder.params()
    }

    pub fn encode(&self, ids: &[u32]) -> Result<BiGruOutput, ModelError> {
        let inputs = self.embedding.lookup(&self.params, ids);
        Ok(self.encoder.forward(&self.params, &inputs)?)
    }

    /// Sentence embedding of an encoded sentence: encoder only.
    pub fn embed_ids(&self, ids: &[u32]) -> Result<Vec<f64>, ModelError> {
        Ok(self.encode(ids)?.concat_finals())
    }

    /// Multitask head probabilities `[p(Negative), p(Positive)]`.
    pub fn predict_affect(&self, ids: &[u32]) -> Result<Vec<f64>, ModelError> {
        let h = self.embed_ids(ids)?;
        Ok(self.head.forward(&self.params, &h)?.probs)
    }

    /// Forward pass, and when `grads` is given, backward pass with
    /// `d_nll_scale` multiplying the summed token NLL and `d_head_scale` the
    /// head cross-entropy. A zero scale skips that branch's backward pass
    /// entirely, so parameters exclusive to it get exactly zero gradient.
    pub fn forward_backward(
        &self,
        pair: &EncodedPair,
        grads: Option<&mut Grads>,
        d_nll_scale: f64,
        d_head_scale: f64,
    ) -> Result<PairStats, ModelError> {
        let ps = &self.params;
        let x_emb = self.embedding.lookup(ps, &pair.x);
        let enc = self.encoder.forward(ps, &x_emb)?;

        let dec_in_ids = &pair.y[..pair.y.len() - 1];
        let targets = &pair.y[1..];
        let dec_in = self.embedding.lookup(ps, dec_in_ids);
        let dec = self.decoder.forward(ps, &dec_in, &enc.finals, enc.top())?;
        let mask = vec![true; targets.len()];
        let (mean_nll, d_logits) = seq_cross_entropy(&dec.logits, targets, &mask);

        let h = enc.concat_finals();
        let head_out = self.head.forward(ps, &h)?;
        let mut stats = PairStats {
            nll_sum: mean_nll * targets.len() as f64,
            tokens: targets.len(),
            ..Default::default()
        };
        if let Some(class) = pair.label.class_index() {
            stats.labeled = 1;
            stats.head_loss_sum = label_cross_entropy(&head_out.probs, pair.label);
            let predicted = usize::from(head_out.probs[1] > head_out.probs[0]);
            stats.head_correct = usize::from(predicted == class);
        }
        if !stats.nll_sum.is_finite() || !stats.head_loss_sum.is_finite() {
            return Err(ModelError::NonFinite("loss".into()));
        }

        let Some(grads) = grads else {
            return Ok(stats);
        };
        let mut d_top = vec![vec![0.0; 2 * self.config.dim]; pair.x.len()];
        let mut d_finals = self.encoder.zero_finals();

        if d_nll_scale != 0.0 {
            // seq_cross_entropy differentiates the mean; rescale to the sum
            let s = d_nll_scale * targets.len() as f64;
            let d_logits: Vec<Vec<f64>> = d_logits
                .into_iter()
                .map(|row| row.into_iter().map(|g| g * s).collect())
                .collect();
            let dg = self.decoder.backward(ps, grads, &dec, enc.top(), &d_logits);
            self.embedding.backward(grads, dec_in_ids, &dg.inputs);
            d_top = dg.encoder_top;
            d_finals = dg.encoder_finals;
        }

        if let (Some(class), true) = (pair.label.class_index(), d_head_scale != 0.0) {
            let mut d_head: Vec<f64> = head_out.probs.iter().map(|p| p * d_head_scale).collect();
            d_head[class] -= d_head_scale;
            let d_h = self.head.backward(ps, grads, &head_out, &d_head);
            add_to_finals(&mut d_finals, &d_h, self.config.dim);
        }

        let d_x = self.encoder.backward(ps, grads, &enc, &d_top, &d_finals);
        self.embedding.backward(grads, &pair.x, &d_x);
        Ok(stats)
    }
}

fn add_to_finals(finals: &mut [LayerFinal], flat: &[f64], d: usize) {
    for (l, f) in finals.iter_mut().enumerate() {
        let base = 2 * d * l;
        for j in 0..d {
            f.fwd[j] += flat[base + j];
            f.bwd[j] += flat[base + d + j];
        }
    }
}
