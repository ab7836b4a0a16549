use rand_chacha::ChaCha8Rng;

use super::attention::{Attention, AttentionCache};
use super::bigru::LayerFinal;
use super::gru::{GruCache, GruCell};
use super::linear::Linear;
use super::tensor::{add_acc, concat};
use super::{Grads, NeuralError, ParamId, ParamSet};

/// Unidirectional GRU decoder of width `2d` with attention over the top
/// encoder layer.
///
/// Layer `l` starts from a linear bridge of the encoder's `[fwd_l; bwd_l]`
/// final states. Each step's top output `o_t` attends over the encoder
/// outputs, and `tanh(W_c [o_t; context_t] + b_c)` is projected to the
/// vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub layers: Vec<GruCell>,
    pub bridges: Vec<Linear>,
    pub attention: Attention,
    pub combine: Linear,
    pub output: Linear,
    pub hidden: usize,
    pub vocab: usize,
}

#[derive(Debug, Clone)]
struct StepCache {
    grus: Vec<GruCache>,
    attn: AttentionCache,
    comb_in: Vec<f64>,
    comb: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DecoderOutput {
    /// `logits[t]` has one entry per vocabulary word.
    pub logits: Vec<Vec<f64>>,
    bridge_inputs: Vec<Vec<f64>>,
    steps: Vec<StepCache>,
}

impl DecoderOutput {
    pub fn attention_weights(&self, t: usize) -> &[f64] {
        self.steps[t].attn.weights()
    }
}

/// Gradients leaving the decoder.
#[derive(Debug, Clone)]
pub struct DecoderGrads {
    pub inputs: Vec<Vec<f64>>,
    pub encoder_top: Vec<Vec<f64>>,
    pub encoder_finals: Vec<LayerFinal>,
}

impl Decoder {
    /// `enc_hidden` is the per-direction encoder width `d`; the decoder runs
    /// at `2d`.
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        input: usize,
        enc_hidden: usize,
        layers: usize,
        vocab: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let hidden = 2 * enc_hidden;
        let bridges = (0..layers)
            .map(|l| Linear::new(ps, &format!("{name}.bridge{l}"), hidden, hidden, rng))
            .collect();
        let cells = (0..layers)
            .map(|l| {
                let m = if l == 0 { input } else { hidden };
                GruCell::new(ps, &format!("{name}.l{l}"), m, hidden, rng)
            })
            .collect();
        let attention = Attention::new(ps, &format!("{name}.attn"), hidden, hidden, rng);
        let combine = Linear::new(ps, &format!("{name}.combine"), 2 * hidden, hidden, rng);
        let output = Linear::new(ps, &format!("{name}.out"), hidden, vocab, rng);
        Decoder {
            layers: cells,
            bridges,
            attention,
            combine,
            output,
            hidden,
            vocab,
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.bridges.iter().flat_map(Linear::params).collect();
        ids.extend(self.layers.iter().flat_map(GruCell::params));
        ids.push(self.attention.proj);
        ids.extend(self.combine.params());
        ids.extend(self.output.params());
        ids
    }

    /// Teacher-forced decoding: `inputs[t]` is the embedding of the gold
    /// token preceding target position `t` (the start symbol at `t = 0`).
    pub fn forward(
        &self,
        ps: &ParamSet,
        inputs: &[Vec<f64>],
        encoder_finals: &[LayerFinal],
        encoder_top: &[Vec<f64>],
    ) -> Result<DecoderOutput, NeuralError> {
        if inputs.is_empty() {
            return Err(NeuralError::Empty("decoder target"));
        }
        if encoder_finals.len() != self.layers.len() {
            return Err(NeuralError::Shape(format!(
                "decoder has {} layers but encoder supplied {} final states",
                self.layers.len(),
                encoder_finals.len()
            )));
        }
        let bridge_inputs: Vec<Vec<f64>> = encoder_finals
            .iter()
            .map(|f| concat(&f.fwd, &f.bwd))
            .collect();
        let mut state: Vec<Vec<f64>> = self
            .bridges
            .iter()
            .zip(&bridge_inputs)
            .map(|(b, x)| b.forward(ps, x))
            .collect();

        let mut logits = Vec::with_capacity(inputs.len());
        let mut steps = Vec::with_capacity(inputs.len());
        for x in inputs {
            let mut grus = Vec::with_capacity(self.layers.len());
            let mut h = x.clone();
            for (l, cell) in self.layers.iter().enumerate() {
                let (h_new, cache) = cell.forward(ps, &h, &state[l])?;
                grus.push(cache);
                state[l] = h_new.clone();
                h = h_new;
            }
            let (context, attn) = self.attention.forward(ps, &h, encoder_top)?;
            let comb_in = concat(&h, &context);
            let comb: Vec<f64> = self
                .combine
                .forward(ps, &comb_in)
                .into_iter()
                .map(f64::tanh)
                .collect();
            let step_logits = self.output.forward(ps, &comb);
            if step_logits.iter().any(|v| !v.is_finite()) {
                return Err(NeuralError::NonFinite("decoder logits".into()));
            }
            logits.push(step_logits);
            steps.push(StepCache {
                grus,
                attn,
                comb_in,
                comb,
            });
        }
        Ok(DecoderOutput {
            logits,
            bridge_inputs,
            steps,
        })
    }

    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut Grads,
        out: &DecoderOutput,
        encoder_top: &[Vec<f64>],
        d_logits: &[Vec<f64>],
    ) -> DecoderGrads {
        let n_layers = self.layers.len();
        let mut d_inputs = vec![Vec::new(); out.steps.len()];
        let mut d_enc = vec![vec![0.0; self.attention.key]; encoder_top.len()];
        let mut carry = vec![vec![0.0; self.hidden]; n_layers];

        for (t, step) in out.steps.iter().enumerate().rev() {
            let d_comb = self.output.backward(ps, grads, &step.comb, &d_logits[t]);
            let d_pre: Vec<f64> = d_comb
                .iter()
                .zip(&step.comb)
                .map(|(g, c)| g * (1.0 - c * c))
                .collect();
            let d_comb_in = self.combine.backward(ps, grads, &step.comb_in, &d_pre);
            let (d_top, d_ctx) = d_comb_in.split_at(self.hidden);
            let mut dh = d_top.to_vec();
            let d_q = self
                .attention
                .backward(ps, grads, &step.attn, encoder_top, d_ctx, &mut d_enc);
            add_acc(&mut dh, &d_q);

            for l in (0..n_layers).rev() {
                add_acc(&mut dh, &carry[l]);
                let (dx, dh_prev) = self.layers[l].backward(ps, grads, &step.grus[l], &dh);
                carry[l] = dh_prev;
                dh = dx;
            }
            d_inputs[t] = dh;
        }

        let encoder_finals = self
            .bridges
            .iter()
            .zip(&out.bridge_inputs)
            .zip(&carry)
            .map(|((b, x), dy)| {
                let dx = b.backward(ps, grads, x, dy);
                let (f, bw) = dx.split_at(self.hidden / 2);
                LayerFinal {
                    fwd: f.to_vec(),
                    bwd: bw.to_vec(),
                }
            })
            .collect();
        DecoderGrads {
            inputs: d_inputs,
            encoder_top: d_enc,
            encoder_finals,
        }
    }
}
