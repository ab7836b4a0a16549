//! `train`: one model, or every cell of a (layers, dim) grid.

use std::path::{Path, PathBuf};

use anyhow::Context;
use mtl_embed::corpus::{build_vocab, read_pairs, RESERVED};
use mtl_embed::model::{
    encode_pairs, save_checkpoint, train, CheckpointKind, EpochStats, ModelConfig, Preset,
};
use serde::Serialize;

use crate::config::{require_file, required, usage, Provenance, RunConfig, TrainSection};
use crate::data::load_lexicon;
use crate::output::{ensure_dir, write_csv, write_json, write_sidecar};

#[derive(Serialize)]
struct CellSummary {
    layers: usize,
    dim: usize,
    embedding_dim: usize,
    directory: String,
    final_checkpoint: String,
    epochs_run: usize,
    stopped_early: bool,
    majority_baseline: f64,
    initial: EpochStats,
    last: EpochStats,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    provenance: &'a Provenance,
    pairs: usize,
    vocab_size: usize,
    cells: Vec<CellSummary>,
}

fn preset_shape(preset: Preset) -> (usize, usize) {
    match preset {
        Preset::Paper => (2, 100),
        Preset::Desk => (2, 8),
    }
}

fn grid_cells(t: &TrainSection) -> Vec<(usize, usize)> {
    let (l0, d0) = preset_shape(t.preset);
    if !t.grid {
        return vec![(t.layers.unwrap_or(l0), t.dim.unwrap_or(d0))];
    }
    let default_dims = match t.preset {
        Preset::Paper => vec![100, 300],
        Preset::Desk => vec![8, 16],
    };
    let layers = t.grid_layers.clone().unwrap_or_else(|| vec![2, 3]);
    let dims = t.grid_dims.clone().unwrap_or(default_dims);
    layers
        .iter()
        .flat_map(|&l| dims.iter().map(move |&d| (l, d)))
        .collect()
}

pub fn model_config(t: &TrainSection, vocab_size: usize, layers: usize, dim: usize) -> ModelConfig {
    let mut m = match t.preset {
        Preset::Paper => ModelConfig::paper(vocab_size, layers, dim),
        Preset::Desk => {
            let mut m = ModelConfig::desk(vocab_size);
            m.layers = layers;
            m.dim = dim;
            m.embed_dim = dim;
            m
        }
    };
    m.lambda = t.lambda;
    m.seed = t.seed;
    m.max_len = t.max_len;
    if let Some(v) = t.epochs {
        m.epochs = v;
    }
    if let Some(v) = t.learning_rate {
        m.learning_rate = v;
    }
    if let Some(v) = t.batch_size {
        m.batch_size = v;
    }
    if let Some(v) = &t.head_hidden {
        m.head_hidden = v.clone();
    }
    if let Some(v) = t.checkpoint_every {
        m.checkpoint_every = v;
    }
    m
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}

pub fn run(cfg: &RunConfig) -> anyhow::Result<()> {
    let t = &cfg.train;
    let pairs_path = required(&t.pairs, "--pairs", "train.pairs")?;
    let out = required(&t.output, "--out", "train.output")?;
    require_file(pairs_path)?;
    let cells = grid_cells(t);
    if cells.is_empty() {
        return Err(usage("the training grid is empty"));
    }
    // Settings are checked against a placeholder vocabulary before any
    // data is read, so a bad flag fails fast as a usage error.
    for &(l, d) in &cells {
        model_config(t, RESERVED.len() + 1, l, d)
            .validate()
            .map_err(|e| usage(e.to_string()))?;
    }
    let lexicon = load_lexicon(t.lexicon.as_deref())?;
    let prov = Provenance::new("train", cfg);
    let prov_value = prov.to_value();

    let pairs = read_pairs(pairs_path)?;
    let vocab = build_vocab(&pairs, t.max_vocab, t.min_count)?;
    let data = encode_pairs(&pairs, &vocab, t.max_len, Some(&lexicon));
    if data.is_empty() {
        return Err(anyhow::anyhow!("{} holds no usable pairs", pairs_path.display()));
    }
    ensure_dir(out)?;

    let mut summaries = Vec::new();
    for &(layers, dim) in &cells {
        let dir: PathBuf = if t.grid {
            out.join(format!("L{layers}_d{dim}"))
        } else {
            out.clone()
        };
        ensure_dir(&dir)?;
        let vocab_path = dir.join("vocab.txt");
        vocab.save(&vocab_path)?;
        write_sidecar(&vocab_path, &prov)?;

        let mc = model_config(t, vocab.len(), layers, dim);
        log::info!("training L={layers} d={dim} on {} pairs", data.len());
        let mut last = None;
        let report = train(&mc, &vocab, &data, |ckpt, kind| {
            let mut ckpt = ckpt.clone();
            ckpt.provenance = Some(prov_value.clone());
            let name = match kind {
                CheckpointKind::EpochEnd => format!("epoch_{:03}.ckpt", ckpt.epoch),
                CheckpointKind::Periodic => format!("step_{:07}.ckpt", ckpt.step),
            };
            save_checkpoint(&ckpt, &dir.join(name))?;
            if kind == CheckpointKind::EpochEnd {
                last = Some(ckpt);
            }
            Ok(())
        })
        .with_context(|| format!("training L={layers} d={dim}"))?;
        let last = last.expect("training runs at least one epoch");
        let final_path = dir.join("model.ckpt");
        save_checkpoint(&last, &final_path)?;

        let mut trace = vec![report.initial];
        trace.extend(report.epochs.iter().copied());
        write_csv(&dir.join("loss_trace.csv"), &trace, &prov)?;

        summaries.push(CellSummary {
            layers,
            dim,
            embedding_dim: mc.embedding_dim(),
            directory: path_string(&dir),
            final_checkpoint: path_string(&final_path),
            epochs_run: report.epochs.len(),
            stopped_early: report.stopped_early,
            majority_baseline: report.majority_baseline,
            initial: report.initial,
            last: *report.epochs.last().expect("at least one epoch"),
        });
    }
    write_json(
        &out.join("run.json"),
        &RunSummary {
            provenance: &prov,
            pairs: data.len(),
            vocab_size: vocab.len(),
            cells: summaries,
        },
    )
}
