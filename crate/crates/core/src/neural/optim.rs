use serde::{Deserialize, Serialize};

use super::{Grads, ParamSet, Tensor};

pub const ADAGRAD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum { momentum: f64 },
    Adagrad,
}

/// One slot per trainable tensor: velocity for momentum SGD, accumulated
/// squared gradient for Adagrad.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub step: u64,
    pub slots: Vec<Tensor>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ParamSet) -> Self {
        assert!(lr > 0.0, "learning rate must be positive");
        OptimizerState {
            kind,
            lr,
            step: 0,
            slots: params.iter().map(|(_, _, t)| Tensor::zeros(t.shape())).collect(),
        }
    }

    /// Applies one update with the current learning rate.
    pub fn step(&mut self, params: &mut ParamSet, grads: &Grads) {
        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                sgd_momentum_step(params, grads, self, self.lr, momentum)
            }
            OptimizerKind::Adagrad => adagrad_step(params, grads, self, self.lr),
        }
    }
}

/// `v ← μ·v + g; θ ← θ − lr·v`
pub fn sgd_momentum_step(
    params: &mut ParamSet,
    grads: &Grads,
    state: &mut OptimizerState,
    lr: f64,
    momentum: f64,
) {
    for (i, id) in params.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let v = state.slots[i].data_mut();
        let g = grads.get(id).data();
        let theta = params.get_mut(id).data_mut();
        for j in 0..theta.len() {
            v[j] = momentum * v[j] + g[j];
            theta[j] -= lr * v[j];
        }
    }
    state.step += 1;
}

/// `G ← G + g²; θ ← θ − lr·g / (√G + ε)`
pub fn adagrad_step(params: &mut ParamSet, grads: &Grads, state: &mut OptimizerState, lr: f64) {
    for (i, id) in params.ids().collect::<Vec<_>>().into_iter().enumerate() {
        let acc = state.slots[i].data_mut();
        let g = grads.get(id).data();
        let theta = params.get_mut(id).data_mut();
        for j in 0..theta.len() {
            acc[j] += g[j] * g[j];
            theta[j] -= lr * g[j] / (acc[j].sqrt() + ADAGRAD_EPS);
        }
    }
    state.step += 1;
}
