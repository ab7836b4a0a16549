use rand_chacha::ChaCha8Rng;

use super::linear::Linear;
use super::tensor::softmax;
use super::{Grads, NeuralError, ParamId, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Feed-forward classifier: ReLU hidden layers, linear output, softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub activations: Vec<Activation>,
}

#[derive(Debug, Clone)]
pub struct MlpOutput {
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    /// Input to each layer; the last entry feeds the output layer.
    inputs: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(
        ps: &mut ParamSet,
        name: &str,
        input: usize,
        hidden: &[usize],
        classes: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut activations = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input;
        for (i, &h) in hidden.iter().enumerate() {
            layers.push(Linear::new_relu(ps, &format!("{name}.h{i}"), prev, h, rng));
            activations.push(Activation::Relu);
            prev = h;
        }
        layers.push(Linear::new(ps, &format!("{name}.out"), prev, classes, rng));
        activations.push(Activation::Identity);
        Mlp {
            layers,
            activations,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("output layer").output
    }

    pub fn params(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(Linear::params).collect()
    }

    pub fn forward(&self, ps: &ParamSet, x: &[f64]) -> Result<MlpOutput, NeuralError> {
        if x.len() != self.input_dim() {
            return Err(NeuralError::Shape(format!(
                "mlp expects input {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_vec();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let mut y = layer.forward(ps, &h);
            if *act == Activation::Relu {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(h);
            h = y;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFinite("mlp logits".into()));
        }
        let probs = softmax(&h);
        Ok(MlpOutput {
            logits: h,
            probs,
            inputs,
        })
    }

    /// Backpropagates a gradient on the logits; returns the input gradient.
    pub fn backward(&self, ps: &ParamSet, grads: &mut Grads, out: &MlpOutput, d_logits: &[f64]) -> Vec<f64> {
        let mut dy = d_logits.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let dx = layer.backward(ps, grads, &out.inputs[i], &dy);
            if i > 0 && self.activations[i - 1] == Activation::Relu {
                // out.inputs[i] is the post-ReLU activation of layer i − 1
                dy = dx
                    .iter()
                    .zip(&out.inputs[i])
                    .map(|(g, &a)| if a > 0.0 { *g } else { 0.0 })
                    .collect();
            } else {
                dy = dx;
            }
        }
        dy
    }
}
