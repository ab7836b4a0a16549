use rand_chacha::ChaCha8Rng;

use super::gru::{GruCache, GruCell};
use super::tensor::{add_acc, concat};
use super::{Grads, NeuralError, ParamId, ParamSet};

/// One bidirectional layer.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruLayer {
    pub fwd: GruCell,
    pub bwd: GruCell,
}

/// Stacked bidirectional GRU. Layer `k > 0` consumes the `[fwd; bwd]`
/// outputs (width `2d`) of layer `k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiGruStack {
    pub layers: Vec<BiGruLayer>,
    pub input: usize,
    pub hidden: usize,
}

/// Final states of one layer: forward at the last step, backward at the
/// first step.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerFinal {
    pub fwd: Vec<f64>,
    pub bwd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BiGruOutput {
    /// `outputs[layer][t] = [fwd_t; bwd_t]`
    pub outputs: Vec<Vec<Vec<f64>>>,
    pub finals: Vec<LayerFinal>,
    caches: Vec<(Vec<GruCache>, Vec<GruCache>)>,
}

impl BiGruOutput {
    pub fn top(&self) -> &[Vec<f64>] {
        self.outputs.last().expect("at least one layer")
    }

    /// `[fwd_1; bwd_1; …; fwd_L; bwd_L]`
    pub fn concat_finals(&self) -> Vec<f64> {
        self.finals
            .iter()
            .flat_map(|f| f.fwd.iter().chain(&f.bwd))
            .copied()
            .collect()
    }
}

impl BiGruStack {
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        input: usize,
        hidden: usize,
        layers: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let m = if l == 0 { input } else { 2 * hidden };
                BiGruLayer {
                    fwd: GruCell::new(ps, &format!("{name}.l{l}.fwd"), m, hidden, rng),
                    bwd: GruCell::new(ps, &format!("{name}.l{l}.bwd"), m, hidden, rng),
                }
            })
            .collect();
        BiGruStack {
            layers,
            input,
            hidden,
        }
    }

    pub fn params(&self) -> Vec<ParamId> {
        self.layers
            .iter()
            .flat_map(|l| l.fwd.params().into_iter().chain(l.bwd.params()))
            .collect()
    }

    pub fn forward(&self, ps: &ParamSet, seq: &[Vec<f64>]) -> Result<BiGruOutput, NeuralError> {
        if seq.is_empty() {
            return Err(NeuralError::Empty("encoder input sequence"));
        }
        let steps = seq.len();
        let d = self.hidden;
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut finals = Vec::with_capacity(self.layers.len());
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut input: &[Vec<f64>] = seq;

        for layer in &self.layers {
            let mut fwd_h = Vec::with_capacity(steps);
            let mut fwd_c = Vec::with_capacity(steps);
            let mut h = vec![0.0; d];
            for x in input {
                let (h_new, cache) = layer.fwd.forward(ps, x, &h)?;
                fwd_c.push(cache);
                fwd_h.push(h_new.clone());
                h = h_new;
            }
            let mut bwd_h = vec![Vec::new(); steps];
            let mut bwd_c = Vec::with_capacity(steps);
            let mut h = vec![0.0; d];
            for t in (0..steps).rev() {
                let (h_new, cache) = layer.bwd.forward(ps, &input[t], &h)?;
                bwd_c.push(cache);
                bwd_h[t] = h_new.clone();
                h = h_new;
            }
            // bwd caches are stored in time order
            bwd_c.reverse();
            let out: Vec<Vec<f64>> = (0..steps).map(|t| concat(&fwd_h[t], &bwd_h[t])).collect();
            finals.push(LayerFinal {
                fwd: fwd_h[steps - 1].clone(),
                bwd: bwd_h[0].clone(),
            });
            caches.push((fwd_c, bwd_c));
            outputs.push(out);
            input = outputs.last().expect("just pushed");
        }
        Ok(BiGruOutput {
            outputs,
            finals,
            caches,
        })
    }

    /// Backpropagates gradients on the top layer's per-step outputs and on
    /// every layer's final states; returns gradients on the input sequence.
    pub fn backward(
        &self,
        ps: &ParamSet,
        grads: &mut Grads,
        out: &BiGruOutput,
        d_top: &[Vec<f64>],
        d_finals: &[LayerFinal],
    ) -> Vec<Vec<f64>> {
        let d = self.hidden;
        let steps = out.outputs[0].len();
        let mut d_out: Vec<Vec<f64>> = d_top.to_vec();

        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (fwd_c, bwd_c) = &out.caches[l];
            let mut d_in = vec![vec![0.0; layer.fwd.input]; steps];

            let mut carry = d_finals[l].fwd.clone();
            for t in (0..steps).rev() {
                let mut dh = carry;
                add_acc(&mut dh, &d_out[t][..d]);
                let (dx, dh_prev) = layer.fwd.backward(ps, grads, &fwd_c[t], &dh);
                add_acc(&mut d_in[t], &dx);
                carry = dh_prev;
            }

            let mut carry = d_finals[l].bwd.clone();
            for t in 0..steps {
                let mut dh = carry;
                add_acc(&mut dh, &d_out[t][d..]);
                let (dx, dh_prev) = layer.bwd.backward(ps, grads, &bwd_c[t], &dh);
                add_acc(&mut d_in[t], &dx);
                carry = dh_prev;
            }
            d_out = d_in;
        }
        d_out
    }

    pub fn zero_finals(&self) -> Vec<LayerFinal> {
        (0..self.layers.len())
            .map(|_| LayerFinal {
                fwd: vec![0.0; self.hidden],
                bwd: vec![0.0; self.hidden],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_seq(rng: &mut ChaCha8Rng, steps: usize, m: usize) -> Vec<Vec<f64>> {
        (0..steps)
            .map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn single_step_finals_equal_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamSet::new();
        let stack = BiGruStack::new(&mut ps, "enc", 3, 4, 2, &mut rng);
        let seq = random_seq(&mut rng, 1, 3);
        let out = stack.forward(&ps, &seq).unwrap();
        for (l, f) in out.finals.iter().enumerate() {
            assert_eq!(out.outputs[l][0], concat(&f.fwd, &f.bwd));
        }
    }

    #[test]
    fn every_layer_has_one_output_per_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ps = ParamSet::new();
        let stack = BiGruStack::new(&mut ps, "enc", 3, 4, 3, &mut rng);
        let seq = random_seq(&mut rng, 6, 3);
        let out = stack.forward(&ps, &seq).unwrap();
        assert_eq!(out.outputs.len(), 3);
        for layer in &out.outputs {
            assert_eq!(layer.len(), 6);
            assert!(layer.iter().all(|o| o.len() == 8));
        }
        assert_eq!(out.concat_finals().len(), 2 * 3 * 4);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let mut ps = ParamSet::new();
        let stack = BiGruStack::new(&mut ps, "enc", 3, 4, 1, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(stack.forward(&ps, &[]), Err(NeuralError::Empty(_))));
    }

    #[test]
    fn reversal_swaps_final_roles_when_directions_are_tied() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut ps = ParamSet::new();
        let stack = BiGruStack::new(&mut ps, "enc", 3, 4, 1, &mut rng);
        let layer = &stack.layers[0];
        for (f, b) in layer.fwd.params().into_iter().zip(layer.bwd.params()) {
            let t = ps.get(f).clone();
            *ps.get_mut(b) = t;
        }
        let seq = random_seq(&mut rng, 5, 3);
        let mut rev = seq.clone();
        rev.reverse();
        let a = stack.forward(&ps, &seq).unwrap();
        let b = stack.forward(&ps, &rev).unwrap();
        assert_eq!(a.finals[0].fwd, b.finals[0].bwd);
        assert_eq!(a.finals[0].bwd, b.finals[0].fwd);
    }
}
