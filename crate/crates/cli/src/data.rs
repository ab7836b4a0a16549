//! `prepare`, `synth` and `label`.

use anyhow::Context;
use mtl_embed::affect::{augment_dataset, AffectLexicon, LabelStats};
use mtl_embed::corpus::{
    build_vocab, generate_emotion_sessions, generate_sessions, generate_synthetic_corpus,
    pair_consecutive, read_documents, read_pairs, write_pairs, NormalizationRules,
};
use mtl_embed::downstream::write_sessions;
use serde::Serialize;

use crate::config::{require_file, required, usage, Provenance, RunConfig};
use crate::output::{ensure_parent, print_json, write_sidecar};

#[derive(Serialize)]
struct PrepareStats {
    documents: usize,
    sentences: usize,
    pairs: usize,
    vocab_size: Option<usize>,
}

pub fn load_lexicon(path: Option<&std::path::Path>) -> anyhow::Result<AffectLexicon> {
    match path {
        None => Ok(AffectLexicon::bundled()),
        Some(p) => {
            require_file(p)?;
            AffectLexicon::load(p).map_err(|e| usage(format!("invalid lexicon {}: {e}", p.display())))
        }
    }
}

pub fn prepare(cfg: &RunConfig, stats: bool) -> anyhow::Result<()> {
    let c = &cfg.prepare;
    let input = required(&c.input, "--in", "prepare.input")?;
    let output = required(&c.output, "--out", "prepare.output")?;
    require_file(input)?;
    let rules = match (&c.misspellings, &c.contractions, &c.common_words) {
        (None, None, None) => NormalizationRules::bundled(),
        (Some(m), Some(k), Some(w)) => {
            for p in [m, k, w] {
                require_file(p)?;
            }
            NormalizationRules::from_files(m, k, w).map_err(|e| usage(e.to_string()))?
        }
        _ => {
            return Err(usage(
                "misspellings, contractions and common_words must be replaced together",
            ))
        }
    };
    let prov = Provenance::new("prepare", cfg);

    let docs = read_documents(input, &rules)?;
    let pairs = pair_consecutive(&docs);
    ensure_parent(output)?;
    write_pairs(output, &pairs)?;
    write_sidecar(output, &prov)?;
    log::info!("{} documents, {} pairs", docs.len(), pairs.len());

    let mut vocab_size = None;
    if let Some(vpath) = &c.vocab {
        if c.max_vocab <= mtl_embed::corpus::RESERVED.len() {
            return Err(usage(format!("--max-vocab {} leaves no room for words", c.max_vocab)));
        }
        let vocab = build_vocab(&pairs, c.max_vocab, c.min_count)?;
        ensure_parent(vpath)?;
        vocab.save(vpath)?;
        write_sidecar(vpath, &prov)?;
        vocab_size = Some(vocab.len());
    }
    if stats {
        print_json(&PrepareStats {
            documents: docs.len(),
            sentences: docs.iter().map(Vec::len).sum(),
            pairs: pairs.len(),
            vocab_size,
        })?;
    }
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> anyhow::Result<()> {
    let c = &cfg.synth;
    if c.output.is_none() && c.sessions_output.is_none() && c.emotion_output.is_none() {
        return Err(usage("nothing to generate: give --out, --sessions-out or --emotion-out"));
    }
    if !(0.0..=1.0).contains(&c.corpus.pos_fraction) {
        return Err(usage(format!("positive fraction {} is not a probability", c.corpus.pos_fraction)));
    }
    let prov = Provenance::new("synth", cfg);
    if let Some(out) = &c.output {
        let corpus = generate_synthetic_corpus(c.seed, c.pairs, &c.corpus);
        ensure_parent(out)?;
        write_pairs(out, &corpus.pairs)?;
        write_sidecar(out, &prov)?;
    }
    if let Some(out) = &c.sessions_output {
        let (sessions, _) = generate_sessions(c.seed.wrapping_add(1), &c.sessions);
        ensure_parent(out)?;
        write_sessions(out, &sessions)?;
        write_sidecar(out, &prov)?;
    }
    if let Some(out) = &c.emotion_output {
        let sessions = generate_emotion_sessions(c.seed.wrapping_add(2), c.emotion_groups, c.emotion_per_group);
        ensure_parent(out)?;
        write_sessions(out, &sessions)?;
        write_sidecar(out, &prov)?;
    }
    Ok(())
}

pub fn label(cfg: &RunConfig, stats: bool) -> anyhow::Result<()> {
    let c = &cfg.label;
    let input = required(&c.input, "--in", "label.input")?;
    let output = required(&c.output, "--out", "label.output")?;
    require_file(input)?;
    let lexicon = load_lexicon(c.lexicon.as_deref())?;
    let prov = Provenance::new("label", cfg);

    let pairs = read_pairs(input).with_context(|| format!("reading pairs from {}", input.display()))?;
    let labeled = augment_dataset(pairs, &lexicon);
    ensure_parent(output)?;
    write_pairs(output, &labeled)?;
    write_sidecar(output, &prov)?;
    if stats {
        print_json(&LabelStats::from_pairs(&labeled))?;
    }
    Ok(())
}
