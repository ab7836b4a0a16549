use rand_chacha::ChaCha8Rng;

use super::tensor::{affine, matvec_t_acc, outer_acc};
use super::{Grads, ParamId, ParamSet};

/// `y = W x + b`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(ps: &mut ParamSet, name: &str, input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        Linear {
            w: ps.add_uniform(format!("{name}.w"), &[output, input], input, rng),
            b: ps.add_uniform(format!("{name}.b"), &[output], input, rng),
            input,
            output,
        }
    }

    /// He-uniform weights and zero bias, for layers followed by a ReLU.
    pub fn new_relu(ps: &mut ParamSet, name: &str, input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / input.max(1) as f64).sqrt();
        Linear {
            w: ps.add_bounded(format!("{name}.w"), &[output, input], bound, rng),
            b: ps.add(format!("{name}.b"), super::Tensor::zeros(&[output])),
            input,
            output,
        }
    }

    pub fn forward(&self, ps: &ParamSet, x: &[f64]) -> Vec<f64> {
        affine(ps.get(self.w), ps.get(self.b), x)
    }

    /// Accumulates parameter gradients and returns `dx`.
    pub fn backward(&self, ps: &ParamSet, grads: &mut Grads, x: &[f64], dy: &[f64]) -> Vec<f64> {
        outer_acc(grads.get_mut(self.w), dy, x);
        super::tensor::add_acc(grads.get_mut(self.b).data_mut(), dy);
        let mut dx = vec![0.0; self.input];
        matvec_t_acc(ps.get(self.w), dy, &mut dx);
        dx
    }

    pub fn params(&self) -> [ParamId; 2] {
        [self.w, self.b]
    }
}

/// Word embedding table of shape `[vocab, dim]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Embedding {
    pub table: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl Embedding {
    pub fn new(ps: &mut ParamSet, name: &str, vocab: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Embedding {
            // unit-variance rows, as is usual for word embeddings
            table: ps.add_bounded(format!("{name}.table"), &[vocab, dim], 3f64.sqrt(), rng),
            vocab,
            dim,
        }
    }

    /// Ids outside the table map to the unknown-word row.
    pub fn lookup(&self, ps: &ParamSet, ids: &[u32]) -> Vec<Vec<f64>> {
        let t = ps.get(self.table);
        ids.iter().map(|&id| t.row(self.row_of(id)).to_vec()).collect()
    }

    pub fn backward(&self, grads: &mut Grads, ids: &[u32], d: &[Vec<f64>]) {
        let g = grads.get_mut(self.table);
        for (&id, di) in ids.iter().zip(d) {
            super::tensor::add_acc(g.row_mut(self.row_of(id)), di);
        }
    }

    fn row_of(&self, id: u32) -> usize {
        let id = id as usize;
        if id < self.vocab {
            id
        } else {
            crate::corpus::UNK as usize
        }
    }
}
