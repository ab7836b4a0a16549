use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Dense row-major tensor of `f64`. Matrices are `[rows, cols]` and act on
/// column vectors, so a weight mapping `m` inputs to `n` outputs is `[n, m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NeuralError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NeuralError::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() > 1 {
            self.shape[1]
        } else {
            1
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// `y += W x`
pub fn matvec_acc(w: &Tensor, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(w.cols(), x.len());
    debug_assert_eq!(w.rows(), y.len());
    for (yi, row) in y.iter_mut().zip(w.data.chunks_exact(x.len().max(1))) {
        *yi += dot(row, x);
    }
}

/// `W x + b`
pub fn affine(w: &Tensor, b: &Tensor, x: &[f64]) -> Vec<f64> {
    let mut y = b.data.clone();
    matvec_acc(w, x, &mut y);
    y
}

/// `gx += Wᵀ gy`
pub fn matvec_t_acc(w: &Tensor, gy: &[f64], gx: &mut [f64]) {
    debug_assert_eq!(w.rows(), gy.len());
    debug_assert_eq!(w.cols(), gx.len());
    for (&g, row) in gy.iter().zip(w.data.chunks_exact(gx.len().max(1))) {
        if g != 0.0 {
            for (o, &wij) in gx.iter_mut().zip(row) {
                *o += g * wij;
            }
        }
    }
}

/// `gW += gy xᵀ`
pub fn outer_acc(gw: &mut Tensor, gy: &[f64], x: &[f64]) {
    debug_assert_eq!(gw.rows(), gy.len());
    debug_assert_eq!(gw.cols(), x.len());
    let cols = x.len().max(1);
    for (&g, row) in gy.iter().zip(gw.data.chunks_exact_mut(cols)) {
        if g != 0.0 {
            for (o, &xj) in row.iter_mut().zip(x) {
                *o += g * xj;
            }
        }
    }
}

pub fn add_acc(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    out
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Pulls a gradient on softmax probabilities back to the logits.
pub fn softmax_backward(probs: &[f64], d_probs: &[f64]) -> Vec<f64> {
    let s = dot(probs, d_probs);
    probs
        .iter()
        .zip(d_probs)
        .map(|(p, dp)| p * (dp - s))
        .collect()
}

pub fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}
