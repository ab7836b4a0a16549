use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    kmeans_fit, kmeans_label_clusters, kmeans_predict_session, knn_predict_session, make_cv_splits,
    metrics, predict_session_rating, select_extremes, train_emotion_dnn, train_rating_estimator,
    DownstreamError, EmotionConfig, KnnIndex, LabeledSession, RatingConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Kmeans,
    Knn,
    Rating,
    Emotion,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Kmeans, Method::Knn, Method::Rating, Method::Emotion];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Kmeans => "kmeans",
            Method::Knn => "knn",
            Method::Rating => "rating",
            Method::Emotion => "emotion",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected kmeans, knn, rating or emotion)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub k_clusters: usize,
    pub kmeans_restarts: usize,
    pub k_neighbors: usize,
    /// Share of sessions kept at each extreme of a behavior's ratings.
    pub extreme_fraction: f64,
    pub seed: u64,
    pub rating: RatingConfig,
    pub emotion: EmotionConfig,
    /// Worker threads for independent folds; 1 runs them in order on the
    /// calling thread.
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            k_clusters: 2,
            kmeans_restarts: 10,
            k_neighbors: 5,
            extreme_fraction: 0.2,
            seed: 0,
            rating: RatingConfig::default(),
            emotion: EmotionConfig::default(),
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub session_id: String,
    pub truth: usize,
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub held_out_group: String,
    pub behavior: String,
    pub method: Method,
    pub accuracy: f64,
    pub wa: f64,
    /// Class names, indexed by label.
    pub classes: Vec<String>,
    pub predictions: Vec<Prediction>,
}

/// Fold-level summary of one behavior/method run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub behavior: String,
    pub method: Method,
    pub folds: usize,
    pub mean_accuracy: f64,
    pub stderr_accuracy: f64,
    pub mean_wa: f64,
    pub stderr_wa: f64,
    /// Accuracy over all held-out sessions pooled across folds.
    pub pooled_accuracy: f64,
    pub pooled_wa: f64,
}

/// Mean and standard error (sample standard deviation / √n; 0 for n < 2).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Panics if `results` is empty or mixes behaviors/methods.
pub fn aggregate(results: &[FoldResult]) -> Aggregate {
    let first = &results[0];
    assert!(
        results
            .iter()
            .all(|r| r.behavior == first.behavior && r.method == first.method),
        "aggregate over mixed behaviors or methods"
    );
    let acc: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let wa: Vec<f64> = results.iter().map(|r| r.wa).collect();
    let (mean_accuracy, stderr_accuracy) = mean_and_stderr(&acc);
    let (mean_wa, stderr_wa) = mean_and_stderr(&wa);
    let (pred, truth): (Vec<usize>, Vec<usize>) = results
        .iter()
        .flat_map(|r| r.predictions.iter().map(|p| (p.predicted, p.truth)))
        .unzip();
    let pooled = metrics(&pred, &truth, first.classes.len());
    Aggregate {
        behavior: first.behavior.clone(),
        method: first.method,
        folds: results.len(),
        mean_accuracy,
        stderr_accuracy,
        mean_wa,
        stderr_wa,
        pooled_accuracy: pooled.accuracy,
        pooled_wa: pooled.weighted_accuracy,
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn run_folds<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>, DownstreamError>
where
    T: Send,
    F: Fn(usize) -> Result<T, DownstreamError> + Sync,
{
    if jobs <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| DownstreamError::Invalid(e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

fn check_embeddings(
    sessions: &[LabeledSession],
    embeddings: &[Vec<Vec<f64>>],
) -> Result<(), DownstreamError> {
    if sessions.len() != embeddings.len() {
        return Err(DownstreamError::Invalid(format!(
            "{} sessions but {} embedded sessions",
            sessions.len(),
            embeddings.len()
        )));
    }
    if let Some(i) = embeddings.iter().position(Vec::is_empty) {
        return Err(DownstreamError::Invalid(format!(
            "session `{}` has no embedded sentence",
            sessions[i].session_id
        )));
    }
    Ok(())
}

/// Binarizes `behavior` by its extremes and classifies held-out sessions
/// with leave-one-group-out folds. `embeddings[i]` are the sentence
/// embeddings of `sessions[i]`.
///
/// The rating method predicts a rating and thresholds it halfway between
/// the mean training ratings of the two extremes.
pub fn evaluate_behavior(
    sessions: &[LabeledSession],
    embeddings: &[Vec<Vec<f64>>],
    behavior: &str,
    method: Method,
    cfg: &EvalConfig,
) -> Result<Vec<FoldResult>, DownstreamError> {
    if method == Method::Emotion {
        return Err(DownstreamError::Invalid(
            "the emotion method applies to emotion-labeled sessions".into(),
        ));
    }
    check_embeddings(sessions, embeddings)?;
    let kept = select_extremes(sessions, behavior, cfg.extreme_fraction)?;
    if kept.is_empty() {
        return Err(DownstreamError::Empty("extreme session set"));
    }
    let groups: Vec<&str> = kept.iter().map(|s| s.group_id.as_str()).collect();
    let splits = make_cv_splits(&groups);
    let emb = |i: usize| embeddings[kept[i].index].as_slice();

    run_folds(splits.len(), cfg.jobs, |f| {
        let split = &splits[f];
        let seed = fold_seed(cfg.seed, split.fold);
        let predict: Box<dyn Fn(&[Vec<f64>]) -> Result<usize, DownstreamError>> = match method {
            Method::Kmeans => {
                let points: Vec<Vec<f64>> = split.train.iter().flat_map(|&i| emb(i).to_vec()).collect();
                let mut model = kmeans_fit(&points, cfg.k_clusters, seed, cfg.kmeans_restarts)?;
                let pool: Vec<(usize, &[Vec<f64>])> =
                    split.train.iter().map(|&i| (kept[i].label, emb(i))).collect();
                kmeans_label_clusters(&mut model, &pool, seed)?;
                Box::new(move |s| kmeans_predict_session(&model, s))
            }
            Method::Knn => {
                let mut points = Vec::new();
                let mut labels = Vec::new();
                for &i in &split.train {
                    for e in emb(i) {
                        points.push(e.clone());
                        labels.push(kept[i].label);
                    }
                }
                let index = KnnIndex::new(points, labels)?;
                let k = cfg.k_neighbors;
                Box::new(move |s| knn_predict_session(&index, s, k))
            }
            Method::Rating => {
                let data: Vec<(&[Vec<f64>], f64, &str)> = split
                    .train
                    .iter()
                    .map(|&i| (emb(i), kept[i].rating, kept[i].group_id.as_str()))
                    .collect();
                let rcfg = RatingConfig {
                    seed,
                    ..cfg.rating.clone()
                };
                let est = train_rating_estimator(&data, &rcfg)?;
                let mean_of = |label| {
                    let r: Vec<f64> = split
                        .train
                        .iter()
                        .filter(|&&i| kept[i].label == label)
                        .map(|&i| kept[i].rating)
                        .collect();
                    (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
                };
                let threshold = match (mean_of(0), mean_of(1)) {
                    (Some(lo), Some(hi)) => 0.5 * (lo + hi),
                    _ => 5.0,
                };
                Box::new(move |s| Ok(usize::from(predict_session_rating(&est, s)? > threshold)))
            }
            Method::Emotion => unreachable!(),
        };
        let predictions = split
            .test
            .iter()
            .map(|&i| {
                Ok(Prediction {
                    session_id: kept[i].session_id.clone(),
                    truth: kept[i].label,
                    predicted: predict(emb(i))?,
                })
            })
            .collect::<Result<Vec<_>, DownstreamError>>()?;
        Ok(fold_result(split, behavior, method, vec!["low".into(), "high".into()], predictions))
    })
}

fn fold_result(
    split: &super::CvSplit,
    behavior: &str,
    method: Method,
    classes: Vec<String>,
    predictions: Vec<Prediction>,
) -> FoldResult {
    let (pred, truth): (Vec<usize>, Vec<usize>) =
        predictions.iter().map(|p| (p.predicted, p.truth)).unzip();
    let m = metrics(&pred, &truth, classes.len());
    FoldResult {
        fold: split.fold,
        held_out_group: split.held_out_group.clone(),
        behavior: behavior.to_string(),
        method,
        accuracy: m.accuracy,
        wa: m.weighted_accuracy,
        classes,
        predictions,
    }
}

/// Emotion recognition: a session (usually one utterance) is represented
/// by the mean of its sentence embeddings. Classes are the sorted distinct
/// emotion labels.
pub fn evaluate_emotion(
    sessions: &[LabeledSession],
    embeddings: &[Vec<Vec<f64>>],
    cfg: &EvalConfig,
) -> Result<Vec<FoldResult>, DownstreamError> {
    check_embeddings(sessions, embeddings)?;
    let mut items = Vec::new();
    for (s, e) in sessions.iter().zip(embeddings) {
        if let Some(label) = s.emotion() {
            let dim = e[0].len();
            let mut mean = vec![0.0; dim];
            for row in e {
                mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / e.len() as f64);
            }
            items.push((s, label, mean));
        }
    }
    if items.is_empty() {
        return Err(DownstreamError::Empty("emotion-labeled session set"));
    }
    let classes: Vec<String> = items
        .iter()
        .map(|i| i.1.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let label_of = |name: &str| classes.iter().position(|c| c == name).expect("known class");
    let groups: Vec<&str> = items.iter().map(|i| i.0.group_id.as_str()).collect();
    let splits = make_cv_splits(&groups);

    run_folds(splits.len(), cfg.jobs, |f| {
        let split = &splits[f];
        let x: Vec<Vec<f64>> = split.train.iter().map(|&i| items[i].2.clone()).collect();
        let y: Vec<usize> = split.train.iter().map(|&i| label_of(items[i].1)).collect();
        let ecfg = EmotionConfig {
            seed: fold_seed(cfg.seed, split.fold),
            ..cfg.emotion.clone()
        };
        let clf = train_emotion_dnn(&x, &y, classes.len(), &ecfg)?;
        let predictions = split
            .test
            .iter()
            .map(|&i| {
                Ok(Prediction {
                    session_id: items[i].0.session_id.clone(),
                    truth: label_of(items[i].1),
                    predicted: clf.predict(&items[i].2)?,
                })
            })
            .collect::<Result<Vec<_>, DownstreamError>>()?;
        Ok(fold_result(split, "emotion", Method::Emotion, classes.clone(), predictions))
    })
}
