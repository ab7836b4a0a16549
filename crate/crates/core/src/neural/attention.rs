use rand_chacha::ChaCha8Rng;

use super::tensor::{dot, matvec_acc, matvec_t_acc, outer_acc, softmax};
use super::{Grads, NeuralError, ParamId, ParamSet};

/// Global multiplicative attention: `score_t = (W s) · e_t`, weights are
/// the softmax of the scores and the context is the weighted sum of the
/// encoder outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attention {
    pub proj: ParamId,
    pub query: usize,
    pub key: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    state: Vec<f64>,
    projected: Vec<f64>,
    weights: Vec<f64>,
}

impl AttentionCache {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Attention {
    pub fn new(ps: &mut ParamSet, name: &str, query: usize, key: usize, rng: &mut ChaCha8Rng) -> Self {
        Attention {
            proj: ps.add_uniform(format!("{name}.proj"), &[key, query], query, rng),
            query,
            key,
        }
    }

    pub fn forward(
        &self,
        ps: &ParamSet,
        state: &[f64],
        encoder_outputs: &[Vec<f64>],
    ) -> Result<(Vec<f64>, AttentionCache), NeuralError> {
        if encoder_outputs.is_empty() {
            return Err(NeuralError::Empty("attention over empty encoder outputs"));
        }
        if state.len() != self.query || encoder_outputs.iter().any(|e| e.len() != self.key) {
            return Err(NeuralError::Shape(format!(
                "attention expects query {} / keys {}",
                self.query, self.key
            )));
        }
        let mut projected = vec![0.0; self.key];
        matvec_acc(ps.get(self.proj), state, &mut projected);
        let scores: Vec<f64> = encoder_outputs.iter().map(|e| dot(&projected, e)).collect();
        let weights = softmax(&scores);
        let mut context = vec![0.0; self.key];
        for (w, e) in weights.iter().zip(encoder_outputs) {
            for (c, v) in context.iter_mut().zip(e) {
                *c += w * v;
            }
        }
        Ok((
            context,
            AttentionCache {
                state: state.to_vec(),
                projected,
                weights,
            },
        ))
    }

    /// Accumulates into `d_encoder` and returns the gradient on the query
    /// state.
    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut Grads,
        cache: &AttentionCache,
        encoder_outputs: &[Vec<f64>],
        d_context: &[f64],
        d_encoder: &mut [Vec<f64>],
    ) -> Vec<f64> {
        let dw: Vec<f64> = encoder_outputs.iter().map(|e| dot(d_context, e)).collect();
        let mean = dot(&cache.weights, &dw);
        let mut d_proj = vec![0.0; self.key];
        for (t, e) in encoder_outputs.iter().enumerate() {
            let w = cache.weights[t];
            let d_score = w * (dw[t] - mean);
            for j in 0..self.key {
                d_encoder[t][j] += w * d_context[j] + d_score * cache.projected[j];
                d_proj[j] += d_score * e[j];
            }
        }
        outer_acc(grads.get_mut(self.proj), &d_proj, &cache.state);
        let mut d_state = vec![0.0; self.query];
        matvec_t_acc(ps.get(self.proj), &d_proj, &mut d_state);
        d_state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn attn() -> (ParamSet, Attention) {
        let mut ps = ParamSet::new();
        let a = Attention::new(&mut ps, "a", 3, 2, &mut ChaCha8Rng::seed_from_u64(1));
        (ps, a)
    }

    #[test]
    fn singleton_gets_all_the_weight() {
        let (ps, a) = attn();
        let enc = vec![vec![0.3, -0.5]];
        let (ctx, cache) = a.forward(&ps, &[1.0, 2.0, 3.0], &enc).unwrap();
        assert_eq!(cache.weights(), [1.0]);
        assert_eq!(ctx, enc[0]);
    }

    #[test]
    fn identical_outputs_get_uniform_weights() {
        let (ps, a) = attn();
        let enc = vec![vec![0.3, -0.5]; 4];
        let (_, cache) = a.forward(&ps, &[1.0, -2.0, 0.5], &enc).unwrap();
        for w in cache.weights() {
            assert!((w - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_encoder_is_an_error() {
        let (ps, a) = attn();
        assert!(a.forward(&ps, &[0.0; 3], &[]).is_err());
    }
}
