//! Versioned binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "MTLS2SCK"
//! version      u32
//! header_len   u64
//! header       canonical JSON: config, vocabulary, tensor manifest,
//!              optimizer metadata, counters, loss trace, provenance
//! blocks       f32 values of every parameter tensor in declaration order,
//!              then every optimizer slot in the same order
//! ```
//!
//! Parameters are snapshotted to `f32`, so a checkpoint round-trips
//! bit-exactly and a model rebuilt from it computes the same embeddings
//! before and after a save/load cycle.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::Seq2SeqMtl;
use super::train::EpochStats;
use super::{ModelConfig, ModelError};
use crate::corpus::Vocabulary;
use crate::neural::{OptimizerKind, OptimizerState, ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MTLS2SCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct F32Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl F32Tensor {
    fn from_tensor(name: &str, t: &Tensor) -> Self {
        F32Tensor {
            name: name.to_string(),
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|&v| v as f32).collect(),
        }
    }

    fn to_tensor(&self) -> Result<Tensor, ModelError> {
        Tensor::from_vec(&self.shape, self.data.iter().map(|&v| f64::from(v)).collect())
            .map_err(|e| ModelError::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSnapshot {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub step: u64,
    pub slots: Vec<F32Tensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub params: Vec<F32Tensor>,
    pub optimizer: OptimizerSnapshot,
    pub epoch: usize,
    pub step: u64,
    pub loss_trace: Vec<EpochStats>,
    /// Resolved run configuration of the producing command, if any.
    pub provenance: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct BlockMeta {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct OptimizerMeta {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    slots: Vec<BlockMeta>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    tool_version: String,
    config: ModelConfig,
    vocab: Vec<(String, u64)>,
    params: Vec<BlockMeta>,
    optimizer: OptimizerMeta,
    epoch: usize,
    step: u64,
    loss_trace: Vec<EpochStats>,
    provenance: Option<serde_json::Value>,
}

fn meta(blocks: &[F32Tensor]) -> Vec<BlockMeta> {
    blocks
        .iter()
        .map(|b| BlockMeta {
            name: b.name.clone(),
            shape: b.shape.clone(),
        })
        .collect()
}

impl Checkpoint {
    pub fn snapshot(
        model: &Seq2SeqMtl,
        opt: &OptimizerState,
        vocab: &Vocabulary,
        epoch: usize,
        trace: &[EpochStats],
    ) -> Self {
        let params: Vec<F32Tensor> = model
            .params
            .iter()
            .map(|(_, name, t)| F32Tensor::from_tensor(name, t))
            .collect();
        let slots = model
            .params
            .iter()
            .zip(&opt.slots)
            .map(|((_, name, _), s)| F32Tensor::from_tensor(name, s))
            .collect();
        Checkpoint {
            config: model.config.clone(),
            vocab: vocab.clone(),
            params,
            optimizer: OptimizerSnapshot {
                kind: opt.kind,
                lr: opt.lr,
                step: opt.step,
                slots,
            },
            epoch,
            step: opt.step,
            loss_trace: trace.to_vec(),
            provenance: None,
        }
    }

    /// Rebuilds the network from the stored parameters.
    pub fn model(&self) -> Result<Seq2SeqMtl, ModelError> {
        let mut ps = ParamSet::new();
        for p in &self.params {
            ps.add(p.name.clone(), p.to_tensor()?);
        }
        Seq2SeqMtl::with_params(self.config.clone(), ps)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, ModelError> {
        let header = Header {
            tool_version: crate::VERSION.to_string(),
            config: self.config.clone(),
            vocab: self
                .vocab
                .words()
                .map(|(w, c)| (w.to_string(), c))
                .collect(),
            params: meta(&self.params),
            optimizer: OptimizerMeta {
                kind: self.optimizer.kind,
                lr: self.optimizer.lr,
                step: self.optimizer.step,
                slots: meta(&self.optimizer.slots),
            },
            epoch: self.epoch,
            step: self.step,
            loss_trace: self.loss_trace.clone(),
            provenance: self.provenance.clone(),
        };
        // Value objects keep keys sorted, which makes the header canonical.
        let value = serde_json::to_value(&header).map_err(|e| ModelError::Format(e.to_string()))?;
        let json = serde_json::to_vec(&value).map_err(|e| ModelError::Format(e.to_string()))?;

        let n_values: usize = self
            .params
            .iter()
            .chain(&self.optimizer.slots)
            .map(|b| b.data.len())
            .sum();
        let mut out = Vec::with_capacity(20 + json.len() + 4 * n_values);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for block in self.params.iter().chain(&self.optimizer.slots) {
            for v in &block.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        Self::from_bytes_versioned(bytes, CHECKPOINT_VERSION)
    }

    fn from_bytes_versioned(bytes: &[u8], supported: u32) -> Result<Self, ModelError> {
        let truncated = || ModelError::Format("checkpoint is truncated".into());
        if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(ModelError::Format("not a checkpoint (bad magic bytes)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != supported {
            return Err(ModelError::Version {
                found: version,
                supported,
            });
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = bytes.get(20..).ok_or_else(truncated)?;
        let json = body.get(..header_len).ok_or_else(truncated)?;
        let header: Header =
            serde_json::from_slice(json).map_err(|e| ModelError::Format(format!("header: {e}")))?;

        let mut blocks = &body[header_len..];
        let mut read_blocks = |metas: Vec<BlockMeta>| -> Result<Vec<F32Tensor>, ModelError> {
            metas
                .into_iter()
                .map(|m| {
                    let n: usize = m.shape.iter().product();
                    if blocks.len() < 4 * n {
                        return Err(truncated());
                    }
                    let (raw, rest) = blocks.split_at(4 * n);
                    blocks = rest;
                    Ok(F32Tensor {
                        name: m.name,
                        shape: m.shape,
                        data: raw
                            .chunks_exact(4)
                            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                            .collect(),
                    })
                })
                .collect()
        };
        let params = read_blocks(header.params)?;
        let slots = read_blocks(header.optimizer.slots)?;
        if !blocks.is_empty() {
            return Err(ModelError::Format(format!(
                "{} trailing bytes after tensor blocks",
                blocks.len()
            )));
        }
        let vocab = Vocabulary::from_entries(header.vocab)
            .map_err(|e| ModelError::Format(e.to_string()))?;
        Ok(Checkpoint {
            config: header.config,
            vocab,
            params,
            optimizer: OptimizerSnapshot {
                kind: header.optimizer.kind,
                lr: header.optimizer.lr,
                step: header.optimizer.step,
                slots,
            },
            epoch: header.epoch,
            step: header.step,
            loss_trace: header.loss_trace,
            provenance: header.provenance,
        })
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), ModelError> {
    let bytes = ckpt.to_bytes()?;
    std::fs::write(path, bytes).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let bytes = std::fs::read(path).map_err(|e| ModelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, DialoguePair, Sentence};

    fn tiny() -> Checkpoint {
        let pairs = vec![DialoguePair::new(
            Sentence::from_normalized("i love the dog"),
            Sentence::from_normalized("the dog is nice"),
        )];
        let vocab = build_vocab(&pairs, 50, 1).unwrap();
        let mut cfg = ModelConfig::desk(vocab.len());
        cfg.dim = 3;
        cfg.embed_dim = 4;
        cfg.head_hidden = vec![4, 3];
        let model = Seq2SeqMtl::new(cfg).unwrap();
        let opt = OptimizerState::new(
            OptimizerKind::SgdMomentum { momentum: 0.9 },
            0.05,
            &model.params,
        );
        Checkpoint::snapshot(&model, &opt, &vocab, 0, &[])
    }

    #[test]
    fn bytes_roundtrip_exactly() {
        let mut c = tiny();
        c.provenance = Some(serde_json::json!({"lambda": 0.5, "note": "x"}));
        let bytes = c.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = tiny().to_bytes().unwrap();
        bytes[0] ^= 0xff;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(ModelError::Format(msg)) if msg.contains("magic")
        ));
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let bytes = tiny().to_bytes().unwrap();
        match Checkpoint::from_bytes_versioned(&bytes, 2) {
            Err(ModelError::Version { found, supported }) => {
                assert_eq!((found, supported), (1, 2));
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn truncation_is_detected() {
        let bytes = tiny().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(Checkpoint::from_bytes(&longer).is_err());
    }
}
