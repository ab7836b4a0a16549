//! `eval`: every checkpoint × method × behavior under leave-one-group-out
//! folds. Writes one JSONL row per fold and one aggregate CSV row per
//! (checkpoint, method, behavior).

use std::collections::BTreeSet;

use mtl_embed::downstream::{
    aggregate, evaluate_behavior, evaluate_emotion, EvalConfig, read_sessions, FoldResult, Method, Prediction,
    SessionTarget,
};
use serde::{Deserialize, Serialize};

use crate::config::{require_file, required, usage, Provenance, RunConfig};
use crate::embed::{embed_sessions, load_embedder};
use crate::output::{ensure_dir, write_csv, write_jsonl};

/// Behavior name under which emotion recognition results are recorded.
pub const EMOTION_BEHAVIOR: &str = "emotion";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub model: String,
    pub checkpoint: String,
    pub behavior: String,
    pub method: Method,
    pub fold: usize,
    pub held_out_group: String,
    pub n_test: usize,
    pub accuracy: f64,
    pub wa: f64,
    pub classes: Vec<String>,
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub checkpoint: String,
    pub behavior: String,
    pub method: Method,
    pub folds: usize,
    pub mean_accuracy: f64,
    pub stderr_accuracy: f64,
    pub mean_wa: f64,
    pub stderr_wa: f64,
    pub pooled_accuracy: f64,
    pub pooled_wa: f64,
}

pub fn run(cfg: &RunConfig, jobs: usize, pool: &rayon::ThreadPool) -> anyhow::Result<()> {
    let c = &cfg.eval;
    if c.checkpoints.is_empty() {
        return Err(usage("missing --checkpoint (or `eval.checkpoints` in the config file)"));
    }
    if !c.labels.is_empty() && c.labels.len() != c.checkpoints.len() {
        return Err(usage(format!(
            "{} labels given for {} checkpoints",
            c.labels.len(),
            c.checkpoints.len()
        )));
    }
    if c.methods.is_empty() {
        return Err(usage("no evaluation method selected"));
    }
    let sessions_path = required(&c.sessions, "--sessions", "eval.sessions")?;
    let out = required(&c.output, "--out", "eval.output")?;
    require_file(sessions_path)?;
    for p in &c.checkpoints {
        require_file(p)?;
    }
    if !(c.settings.extreme_fraction > 0.0 && c.settings.extreme_fraction <= 0.5) {
        return Err(usage(format!(
            "extreme fraction {} outside (0, 0.5]",
            c.settings.extreme_fraction
        )));
    }
    let prov = Provenance::new("eval", cfg);
    let settings = EvalConfig { jobs, ..c.settings.clone() };

    let sessions = read_sessions(sessions_path)?;
    let behaviors: Vec<String> = if c.behaviors.is_empty() {
        sessions
            .iter()
            .filter_map(|s| match &s.target {
                SessionTarget::Ratings(r) => Some(r.keys().cloned()),
                SessionTarget::Emotion(_) => None,
            })
            .flatten()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        c.behaviors.clone()
    };
    if behaviors.is_empty() && c.methods.iter().any(|&m| m != Method::Emotion) {
        return Err(anyhow::anyhow!(
            "{} has no rated behaviors to evaluate",
            sessions_path.display()
        ));
    }

    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for (i, ckpt_path) in c.checkpoints.iter().enumerate() {
        let checkpoint = ckpt_path.display().to_string();
        let model = c.labels.get(i).cloned().unwrap_or_else(|| checkpoint.clone());
        let embedder = load_embedder(ckpt_path)?;
        let embeddings: Vec<Vec<Vec<f64>>> = pool
            .install(|| embed_sessions(&embedder, &sessions))?
            .into_iter()
            .map(|s| s.into_iter().map(|e| e.values).collect())
            .collect();
        log::info!("embedded {} sessions with {checkpoint}", sessions.len());

        for &method in &c.methods {
            let runs: Vec<(String, Vec<FoldResult>)> = if method == Method::Emotion {
                vec![(
                    EMOTION_BEHAVIOR.to_string(),
                    evaluate_emotion(&sessions, &embeddings, &settings)?,
                )]
            } else {
                behaviors
                    .iter()
                    .map(|b| {
                        evaluate_behavior(&sessions, &embeddings, b, method, &settings)
                            .map(|r| (b.clone(), r))
                    })
                    .collect::<Result<_, _>>()?
            };
            for (behavior, folds) in runs {
                if folds.is_empty() {
                    log::warn!("{model}: no folds for {behavior}/{method}");
                    continue;
                }
                let agg = aggregate(&folds);
                aggregates.push(AggregateRow {
                    model: model.clone(),
                    checkpoint: checkpoint.clone(),
                    behavior: behavior.clone(),
                    method,
                    folds: agg.folds,
                    mean_accuracy: agg.mean_accuracy,
                    stderr_accuracy: agg.stderr_accuracy,
                    mean_wa: agg.mean_wa,
                    stderr_wa: agg.stderr_wa,
                    pooled_accuracy: agg.pooled_accuracy,
                    pooled_wa: agg.pooled_wa,
                });
                rows.extend(folds.into_iter().map(|f| ResultRow {
                    model: model.clone(),
                    checkpoint: checkpoint.clone(),
                    behavior: behavior.clone(),
                    method,
                    fold: f.fold,
                    held_out_group: f.held_out_group,
                    n_test: f.predictions.len(),
                    accuracy: f.accuracy,
                    wa: f.wa,
                    classes: f.classes,
                    predictions: f.predictions,
                }));
            }
        }
    }

    ensure_dir(out)?;
    write_jsonl(&out.join("results.jsonl"), &rows, &prov)?;
    write_csv(&out.join("aggregate.csv"), &aggregates, &prov)
}
