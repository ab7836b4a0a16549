//! `embed`: sentence embeddings of sessions or raw text.

use std::path::Path;

use anyhow::Context;
use mtl_embed::downstream::{read_sessions, LabeledSession};
use mtl_embed::model::{
    load_checkpoint, write_embeddings_binary, write_embeddings_csv, Embedder, SentenceEmbedding,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{require_file, required, usage, EmbedFormat, Provenance, RunConfig};
use crate::output::{ensure_parent, write_json};

#[derive(Serialize)]
struct ManifestRow {
    row: usize,
    session_id: Option<String>,
    sentence: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    provenance: &'a Provenance,
    checkpoint: String,
    format: EmbedFormat,
    count: usize,
    dim: usize,
    rows: Vec<ManifestRow>,
}

pub fn load_embedder(path: &Path) -> anyhow::Result<Embedder> {
    require_file(path)?;
    let ckpt = load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    Ok(Embedder::from_checkpoint(&ckpt)?)
}

/// Embeds every session in order; sessions run in parallel on the current
/// rayon pool.
pub fn embed_sessions(
    embedder: &Embedder,
    sessions: &[LabeledSession],
) -> anyhow::Result<Vec<Vec<SentenceEmbedding>>> {
    sessions
        .par_iter()
        .map(|s| {
            embedder
                .embed_session(&s.sentences)
                .with_context(|| format!("embedding session {}", s.session_id))
        })
        .collect()
}

pub fn manifest_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn run(cfg: &RunConfig, pool: &rayon::ThreadPool) -> anyhow::Result<()> {
    let c = &cfg.embed;
    let ckpt_path = required(&c.checkpoint, "--checkpoint", "embed.checkpoint")?;
    let out = required(&c.output, "--out", "embed.output")?;
    let source = match (&c.sessions, &c.text) {
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => return Err(usage("give --sessions or --text")),
        (Some(_), Some(_)) => return Err(usage("--sessions and --text are mutually exclusive")),
    };
    require_file(source)?;
    let embedder = load_embedder(ckpt_path)?;
    let prov = Provenance::new("embed", cfg);

    let mut rows = Vec::new();
    let mut embeddings = Vec::new();
    if c.sessions.is_some() {
        let sessions = read_sessions(source)?;
        let per_session = pool.install(|| embed_sessions(&embedder, &sessions))?;
        for (s, embs) in sessions.iter().zip(per_session) {
            for e in embs {
                rows.push(ManifestRow {
                    row: rows.len(),
                    session_id: Some(s.session_id.clone()),
                    sentence: e.sentence.clone(),
                });
                embeddings.push(e);
            }
        }
    } else {
        let text = std::fs::read_to_string(source)
            .with_context(|| format!("reading {}", source.display()))?;
        let lines: Vec<&str> = text.lines().collect();
        embeddings = embedder
            .embed_session(&lines)
            .with_context(|| format!("{} holds no usable sentence", source.display()))?;
        rows = embeddings
            .iter()
            .enumerate()
            .map(|(row, e)| ManifestRow {
                row,
                session_id: None,
                sentence: e.sentence.clone(),
            })
            .collect();
    }

    ensure_parent(out)?;
    match c.format {
        EmbedFormat::Bin => write_embeddings_binary(out, &embeddings)?,
        EmbedFormat::Csv => write_embeddings_csv(out, &embeddings)?,
    }
    write_json(
        &manifest_path(out),
        &Manifest {
            provenance: &prov,
            checkpoint: ckpt_path.display().to_string(),
            format: c.format,
            count: embeddings.len(),
            dim: embedder.dim(),
            rows,
        },
    )
}
