//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use common::oracles::{brute_force_knn, brute_force_label, random_sentence};
use common::MAX_REL_ERR;
use mtl_embed::affect::{label_sentence, AffectLabel, AffectLexicon};
use mtl_embed::corpus::{
    build_vocab, generate_synthetic_corpus, Sentence,
    SynthConfig, DEFAULT_MAX_LEN,
};
use mtl_embed::downstream::{
    kmeans_fit, kmeans_label_clusters, kmeans_predict_session, knn_predict_point, make_cv_splits,
    metrics, svr_fit_1d, KnnIndex,
};
use mtl_embed::model::{
    encode_pairs, load_checkpoint, save_checkpoint, train, Checkpoint, EncodedPair, Embedder,
    ModelConfig, Seq2SeqMtl, TrainReport,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BIN: &str = env!("CARGO_BIN_EXE_mtl-embed");

fn main() {
    let criteria: Vec<(&str, fn() -> Result<String>)> = vec![
        ("gradient suite", c1_gradients),
        ("lambda isolation", c2_lambda_isolation),
        ("convergence smoke test", c3_convergence),
        ("labeler oracle", c4_labeler),
        ("embedding contract", c5_embeddings),
        ("downstream oracles", c6_downstream),
        ("multitask trend", c7_trend),
        ("cross-validation partition", c8_cv),
        ("end-to-end pipeline", c9_pipeline),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(anyhow::anyhow!("panicked: {msg}"))
            });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {} {name}: {e:#} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn within(start: Instant, budget: Duration, what: &str) -> Result<()> {
    let t = start.elapsed();
    ensure!(t < budget, "{what} took {t:?}, budget {budget:?}");
    Ok(())
}

// ---------------------------------------------------------------- 1

fn c1_gradients() -> Result<String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (name, case) in common::cases::ALL {
        for seed in 0..common::cases::SEEDS {
            let err = case(seed);
            ensure!(err < MAX_REL_ERR, "{name} seed {seed}: relative error {err:e}");
            worst = worst.max(err);
        }
    }
    within(start, Duration::from_secs(120), "gradient suite")?;
    Ok(format!(
        "{} ops x {} seeds, worst relative error {worst:.1e}",
        common::cases::ALL.len(),
        common::cases::SEEDS
    ))
}

// ---------------------------------------------------------------- 2

fn corpus_data(seed: u64, n: usize, cfg: &SynthConfig, max_len: usize) -> (mtl_embed::corpus::Vocabulary, Vec<EncodedPair>) {
    let c = generate_synthetic_corpus(seed, n, cfg);
    let vocab = build_vocab(&c.pairs, 20_000, 1).expect("vocabulary");
    let data = encode_pairs(&c.pairs, &vocab, max_len, Some(&AffectLexicon::bundled()));
    (vocab, data)
}

fn small_config(vocab: usize) -> ModelConfig {
    let mut cfg = ModelConfig::desk(vocab);
    cfg.dim = 4;
    cfg.embed_dim = 4;
    cfg.head_hidden = vec![6, 5];
    cfg.epochs = 1;
    cfg.early_stopping_patience = None;
    cfg
}

/// Gradient of one mini-batch, scaled exactly as the training loop does.
fn batch_gradient(model: &Seq2SeqMtl, batch: &[EncodedPair], lambda: f64) -> mtl_embed::neural::Grads {
    let tokens: usize = batch.iter().map(|p| p.y.len() - 1).sum();
    let labeled = batch.iter().filter(|p| p.label.class_index().is_some()).count();
    let head_scale = if labeled == 0 { 0.0 } else { (1.0 - lambda) / labeled as f64 };
    let mut g = model.params.zeros_like();
    for p in batch {
        model
            .forward_backward(p, Some(&mut g), lambda / tokens as f64, head_scale)
            .expect("finite forward");
    }
    g
}

fn c2_lambda_isolation() -> Result<String> {
    let (vocab, data) = corpus_data(3, 80, &SynthConfig::default(), DEFAULT_MAX_LEN);
    let mut checked = 0;
    for seed in 0..5 {
        let mut cfg = small_config(vocab.len());
        cfg.seed = seed;
        let model = Seq2SeqMtl::new(cfg).context("model")?;
        let batch = &data[(seed as usize * 16)..(seed as usize * 16 + 16)];
        ensure!(batch.iter().any(|p| p.label != AffectLabel::Unlabeled));

        let g = batch_gradient(&model, batch, 1.0);
        for id in model.head_params() {
            ensure!(g.is_zero(id), "lambda=1: head gradient {} not zero", model.params.name(id));
        }
        ensure!(model.decoder_params().iter().any(|&id| !g.is_zero(id)));

        let g = batch_gradient(&model, batch, 0.0);
        for id in model.decoder_params() {
            ensure!(g.is_zero(id), "lambda=0: decoder gradient {} not zero", model.params.name(id));
        }
        ensure!(model.head_params().iter().any(|&id| !g.is_zero(id)));
        checked += 1;
    }

    // and end to end: two epochs at lambda = 1 never move the head
    let mut cfg = small_config(vocab.len());
    cfg.lambda = 1.0;
    cfg.epochs = 2;
    let init = Seq2SeqMtl::new(cfg.clone())?;
    let (_, last) = train_last(&cfg, &vocab, &data)?;
    let trained = last.model()?;
    for id in init.head_params() {
        let a: Vec<f32> = init.params.get(id).data().iter().map(|&v| v as f32).collect();
        let b: Vec<f32> = trained.params.get(id).data().iter().map(|&v| v as f32).collect();
        ensure!(a == b, "head tensor {} moved during lambda=1 training", init.params.name(id));
    }
    Ok(format!("{checked} batches per extreme exactly zero; lambda=1 training leaves the head at init"))
}

fn train_last(
    cfg: &ModelConfig,
    vocab: &mtl_embed::corpus::Vocabulary,
    data: &[EncodedPair],
) -> Result<(TrainReport, Checkpoint)> {
    let mut last = None;
    let report = train(cfg, vocab, data, |c, _| {
        last = Some(c.clone());
        Ok(())
    })?;
    Ok((report, last.context("no checkpoint")?))
}

// ---------------------------------------------------------------- 3

fn c3_convergence() -> Result<String> {
    let start = Instant::now();
    let echo = SynthConfig {
        echo: true,
        ..Default::default()
    };
    let (vocab, data) = corpus_data(1, 200, &echo, DEFAULT_MAX_LEN);
    let mut cfg = ModelConfig::desk(vocab.len());
    cfg.epochs = 50;
    cfg.early_stopping_patience = None;
    let (report, _) = train_last(&cfg, &vocab, &data)?;
    let l0 = report.initial.l1;
    let l_end = report.epochs.last().context("no epochs")?.l1;
    let reduction = 1.0 - l_end / l0;
    ensure!(reduction >= 0.5, "echo L1 fell only {:.1}% ({l0:.3} -> {l_end:.3})", 100.0 * reduction);
    let mut prev = l0;
    for e in &report.epochs {
        ensure!(e.l1 <= prev, "echo L1 rose at epoch {}: {prev} -> {}", e.epoch, e.l1);
        prev = e.l1;
    }

    let (vocab, data) = corpus_data(2, 200, &SynthConfig::default(), DEFAULT_MAX_LEN);
    let mut cfg = ModelConfig::desk(vocab.len());
    cfg.epochs = 50;
    cfg.early_stopping_patience = None;
    let (report, _) = train_last(&cfg, &vocab, &data)?;
    let acc = report.epochs.last().context("no epochs")?.head_accuracy;
    ensure!(acc >= 0.95, "multitask training accuracy {acc:.3} < 0.95");
    ensure!(
        acc - report.majority_baseline >= 0.2,
        "head accuracy {acc:.3} within 20 points of the majority baseline {:.3}",
        report.majority_baseline
    );
    within(start, Duration::from_secs(300), "convergence runs")?;
    Ok(format!(
        "echo L1 {l0:.3} -> {l_end:.3} (-{:.0}%, monotone); head accuracy {acc:.3} vs baseline {:.3}",
        100.0 * reduction,
        report.majority_baseline
    ))
}

// ---------------------------------------------------------------- 4

fn c4_labeler() -> Result<String> {
    let lex = AffectLexicon::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 3];
    for i in 0..1000 {
        let s = random_sentence(&mut rng, &lex);
        let got = label_sentence(&s, &lex);
        ensure!(got == brute_force_label(&s, &lex), "sentence {i} `{s}` disagrees with the oracle");
        counts[match got {
            AffectLabel::Positive => 0,
            AffectLabel::Negative => 1,
            AffectLabel::Unlabeled => 2,
        }] += 1;
    }
    ensure!(label_sentence(&Sentence::new(["love"]), &lex) == AffectLabel::Positive);
    ensure!(label_sentence(&Sentence::new(["hate"]), &lex) == AffectLabel::Negative);
    Ok(format!(
        "1000/1000 agree ({} positive, {} negative, {} unlabeled); love/hate polarity correct",
        counts[0], counts[1], counts[2]
    ))
}

// ---------------------------------------------------------------- 5

fn c5_embeddings() -> Result<String> {
    let (vocab, data) = corpus_data(4, 30, &SynthConfig::default(), 12);
    let probes: Vec<Sentence> = [
        "i love the dog",
        "the car is awful today",
        "my job",
        "you always make the dog feel sweet",
        "i love the dog",
    ]
    .iter()
    .map(|s| Sentence::from_normalized(s))
    .collect();
    let dir = tempfile::tempdir()?;
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let mut cells = 0;
    for layers in [2, 3] {
        for dim in [8, 16] {
            let mut cfg = small_config(vocab.len());
            cfg.layers = layers;
            cfg.dim = dim;
            cfg.max_len = 12;
            let (_, ckpt) = train_last(&cfg, &vocab, &data)?;
            let e = Embedder::from_checkpoint(&ckpt)?;
            ensure!(e.dim() == 2 * layers * dim);
            let batch = e.embed_batch(&probes)?;
            for (s, b) in probes.iter().zip(&batch) {
                ensure!(b.values.len() == 2 * layers * dim, "L={layers} d={dim}: dimension {}", b.values.len());
                let single = e.embed_sentence(s)?;
                ensure!(bits(&single.values) == bits(&b.values), "L={layers} d={dim}: batched != single");
            }
            let path = dir.path().join(format!("L{layers}_d{dim}.ckpt"));
            save_checkpoint(&ckpt, &path)?;
            let back = Embedder::from_checkpoint(&load_checkpoint(&path)?)?;
            for s in &probes {
                ensure!(
                    bits(&back.embed_sentence(s)?.values) == bits(&e.embed_sentence(s)?.values),
                    "L={layers} d={dim}: checkpoint round trip changed an embedding"
                );
            }
            cells += 1;
        }
    }
    Ok(format!("{cells} grid cells: |h| = 2Ld, batched == single, round trip bitwise"))
}

// ---------------------------------------------------------------- 6

fn c6_downstream() -> Result<String> {
    // k-NN against the all-pairs oracle on 200-point instances
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut queries = 0;
    for trial in 0..20 {
        let classes = 2 + trial % 3;
        let points: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..3).map(|_| rng.gen_range(0..5) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..200).map(|_| rng.gen_range(0..classes)).collect();
        let index = KnnIndex::new(points.clone(), labels.clone())?;
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0..5) as f64).collect();
            let k = rng.gen_range(1..=15);
            ensure!(knn_predict_point(&index, &x, k)? == brute_force_knn(&points, &labels, &x, k));
            queries += 1;
        }
    }

    // WCSS never increases across Lloyd iterations
    for seed in 0..20 {
        let pts: Vec<Vec<f64>> = (0..150).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
        let m = kmeans_fit(&pts, 4, seed, 1)?;
        for w in m.wcss_trace.windows(2) {
            ensure!(w[1] <= w[0] + 1e-12, "WCSS rose: {:?}", m.wcss_trace);
        }
    }

    // sessions drawn around centers 10σ apart
    let dim = 6;
    let session = |rng: &mut ChaCha8Rng, class: usize| -> Vec<Vec<f64>> {
        (0..8)
            .map(|_| {
                (0..dim)
                    .map(|j| {
                        let center = if j == 0 { 10.0 * class as f64 } else { 0.0 };
                        let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                        center + z
                    })
                    .collect()
            })
            .collect()
    };
    let train: Vec<(usize, Vec<Vec<f64>>)> = (0..20).map(|i| (i % 2, session(&mut rng, i % 2))).collect();
    let points: Vec<Vec<f64>> = train.iter().flat_map(|s| s.1.clone()).collect();
    let mut model = kmeans_fit(&points, 2, 1, 5)?;
    let pool: Vec<(usize, &[Vec<f64>])> = train.iter().map(|(l, s)| (*l, s.as_slice())).collect();
    kmeans_label_clusters(&mut model, &pool, 1)?;
    let mut correct = 0;
    for i in 0..40 {
        if kmeans_predict_session(&model, &session(&mut rng, i % 2))? == i % 2 {
            correct += 1;
        }
    }
    ensure!(correct == 40, "k-means session accuracy {correct}/40");

    // SVR on a noiseless line
    let x: Vec<f64> = (0..41).map(|i| -2.0 + 0.1 * i as f64).collect();
    let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
    let p = svr_fit_1d(&x, &y, 0.01, 100.0)?;
    ensure!(
        (p.slope - 2.0).abs() <= 0.05 && (p.intercept - 1.0).abs() <= 0.05,
        "SVR fit slope {} intercept {}",
        p.slope,
        p.intercept
    );

    // 90 class-0 sessions all right, 10 class-1 all wrong: WA = 0.5
    let truth: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
    let m = metrics(&[0; 100], &truth, 2);
    ensure!((m.weighted_accuracy - 0.5).abs() < 1e-12 && (m.accuracy - 0.9).abs() < 1e-12);

    Ok(format!(
        "k-NN {queries}/{queries} match; WCSS monotone; 10σ clusters 40/40; SVR y = {:.3}x + {:.3}; WA 0.5",
        p.slope, p.intercept
    ))
}

// ---------------------------------------------------------------- 7, 9

fn cli(dir: &Path, args: &[&str]) -> Result<String> {
    let out = Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .output()
        .with_context(|| format!("running mtl-embed {}", args.join(" ")))?;
    if !out.status.success() {
        bail!(
            "mtl-embed {} exited with {}: {}",
            args.join(" "),
            out.status,
            String::from_utf8_lossy(&out.stderr)
        );
    }
    Ok(String::from_utf8(out.stdout)?)
}

fn read_csv(path: &Path) -> Result<Vec<std::collections::BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}

fn c7_trend() -> Result<String> {
    let start = Instant::now();
    let dir = tempfile::tempdir()?;
    let d = dir.path();
    let mut results = Vec::new();
    let mut per_seed = Vec::new();
    for seed in 0..5u64 {
        let s = seed.to_string();
        let data = format!("s{seed}");
        cli(d, &[
            "synth", "--seed", &(100 + seed).to_string(), "--pairs", "1000",
            "--out", &format!("{data}/pairs.tsv"), "--sessions-out", &format!("{data}/sessions.jsonl"),
        ])?;
        cli(d, &["label", "--in", &format!("{data}/pairs.tsv"), "--out", &format!("{data}/labeled.tsv")])?;
        for (tag, lambda) in [("mtl", "0.5"), ("base", "1.0")] {
            cli(d, &[
                "train", "--pairs", &format!("{data}/labeled.tsv"), "--out", &format!("{data}/{tag}"),
                "--lambda", lambda, "--seed", &s,
            ])?;
        }
        cli(d, &[
            "eval", "--sessions", &format!("{data}/sessions.jsonl"), "--method", "knn",
            "--checkpoint", &format!("{data}/mtl/model.ckpt"), "--label", "lambda=0.5",
            "--checkpoint", &format!("{data}/base/model.ckpt"), "--label", "lambda=1.0",
            "--out", &format!("{data}/eval"),
        ])?;
        let agg = read_csv(&d.join(format!("{data}/eval/aggregate.csv")))?;
        let mean_of = |label: &str| -> Result<f64> {
            let v: Vec<f64> = agg
                .iter()
                .filter(|r| r["model"] == label)
                .map(|r| r["mean_accuracy"].parse::<f64>())
                .collect::<Result<_, _>>()?;
            ensure!(!v.is_empty(), "no aggregate rows for {label}");
            Ok(v.iter().sum::<f64>() / v.len() as f64)
        };
        per_seed.push((mean_of("lambda=0.5")?, mean_of("lambda=1.0")?));
        results.push(format!("{data}/eval/results.jsonl"));
    }
    let mut args = vec!["report", "--csv", "report.csv"];
    for r in &results {
        args.push("--results");
        args.push(r);
    }
    let table = cli(d, &args)?;
    let report = read_csv(&d.join("report.csv"))?;
    for label in ["lambda=0.5", "lambda=1.0"] {
        let row = report
            .iter()
            .find(|r| r["model"] == label)
            .with_context(|| format!("report lacks {label}"))?;
        for key in ["negativity_stderr", "positivity_stderr", "mean"] {
            ensure!(!row[key].is_empty(), "report row {label} has no {key}");
        }
        ensure!(table.contains(label));
    }

    let n = per_seed.len() as f64;
    let mtl = per_seed.iter().map(|p| p.0).sum::<f64>() / n;
    let base = per_seed.iter().map(|p| p.1).sum::<f64>() / n;
    ensure!(mtl >= base, "lambda=0.5 accuracy {mtl:.3} below lambda=1.0 accuracy {base:.3}");
    within(start, Duration::from_secs(900), "trend experiment")?;
    Ok(format!("mean k-NN accuracy over 5 seeds: lambda=0.5 {mtl:.3} vs lambda=1.0 {base:.3}"))
}

fn c8_cv() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let groups: Vec<String> = (0..200).map(|_| format!("couple{}", rng.gen_range(0..10))).collect();
    let splits = make_cv_splits(&groups);
    ensure!(splits.len() == 10, "{} folds for 10 groups", splits.len());
    let mut seen = vec![0usize; groups.len()];
    for s in &splits {
        for &i in &s.test {
            ensure!(groups[i] == s.held_out_group, "fold {} tests a foreign session", s.fold);
            seen[i] += 1;
        }
        for &i in &s.train {
            ensure!(groups[i] != s.held_out_group, "fold {} leaks group {}", s.fold, s.held_out_group);
        }
        ensure!(s.train.len() + s.test.len() == groups.len());
    }
    ensure!(seen.iter().all(|&c| c == 1), "a session is tested zero or several times");
    Ok("10 folds partition 200 sessions, no group in both train and test".into())
}

fn pipeline(dir: &Path) -> Result<()> {
    let steps: [&[&str]; 7] = [
        &["synth", "--seed", "7", "--pairs", "400", "--out", "data/pairs.tsv", "--sessions-out", "data/sessions.jsonl"],
        &["label", "--in", "data/pairs.tsv", "--out", "data/labeled.tsv", "--stats"],
        &["train", "--pairs", "data/labeled.tsv", "--out", "run", "--preset", "desk", "--seed", "7"],
        &["embed", "--checkpoint", "run/model.ckpt", "--sessions", "data/sessions.jsonl", "--out", "emb/sessions.bin"],
        &["embed", "--checkpoint", "run/model.ckpt", "--sessions", "data/sessions.jsonl", "--out", "emb/sessions.csv", "--format", "csv"],
        &["--jobs", "2", "eval", "--checkpoint", "run/model.ckpt", "--label", "desk", "--sessions", "data/sessions.jsonl",
          "--method", "knn", "--method", "kmeans", "--out", "eval"],
        &["report", "--results", "eval/results.jsonl", "--out", "report/table.txt", "--csv", "report/table.csv"],
    ];
    for args in steps {
        cli(dir, args)?;
    }
    Ok(())
}

fn tree(root: &Path) -> Result<std::collections::BTreeMap<String, Vec<u8>>> {
    let mut files = std::collections::BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root)?.display().to_string();
                files.insert(rel, std::fs::read(&p)?);
            }
        }
    }
    Ok(files)
}

fn c9_pipeline() -> Result<String> {
    let start = Instant::now();
    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    pipeline(a.path())?;
    pipeline(b.path())?;
    within(start, Duration::from_secs(900), "two pipeline runs")?;
    let (ta, tb) = (tree(a.path())?, tree(b.path())?);
    ensure!(ta.keys().eq(tb.keys()), "runs produced different file sets");
    for (name, bytes) in &ta {
        ensure!(tb[name] == *bytes, "{name} differs between runs");
    }
    ensure!(ta.contains_key("report/table.csv") && ta.contains_key("run/loss_trace.csv"));
    Ok(format!("{} artifacts byte-identical across two runs", ta.len()))
}
