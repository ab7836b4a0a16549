//! Differentiable building blocks with explicit backward passes.
//!
//! Every layer stores [`ParamId`] handles into a shared [`ParamSet`].
//! `forward` returns outputs plus a cache; `backward` takes the cache and
//! the upstream gradient, accumulates into a [`Grads`] and returns the
//! gradient on its inputs. All arithmetic is `f64` and single-threaded, so
//! a forward/backward pass is bit-reproducible.

pub mod attention;
pub mod bigru;
pub mod decoder;
pub mod gru;
pub mod linear;
pub mod loss;
pub mod lstm;
pub mod mlp;
pub mod optim;
mod params;
pub mod tensor;

use thiserror::Error;

pub use attention::Attention;
pub use bigru::{BiGruOutput, BiGruStack, LayerFinal};
pub use decoder::{Decoder, DecoderGrads, DecoderOutput};
pub use gru::GruCell;
pub use linear::{Embedding, Linear};
pub use loss::{combined_loss, label_cross_entropy, label_cross_entropy_batch, seq_cross_entropy};
pub use lstm::LstmCell;
pub use mlp::{Activation, Mlp, MlpOutput};
pub use optim::{adagrad_step, sgd_momentum_step, OptimizerKind, OptimizerState};
pub use params::{clip_global_norm, Grads, ParamId, ParamSet};
pub use tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
}
