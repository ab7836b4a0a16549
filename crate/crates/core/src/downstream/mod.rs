//! Session-level behavior classification and utterance-level emotion
//! recognition on top of sentence embeddings, with leave-one-group-out
//! evaluation.
//!
//! Embeddings enter as plain `Vec<f64>` rows; a session is the ordered list
//! of its sentences' embeddings. Class labels are `usize`; for binarized
//! behaviors 0 is the low extreme and 1 the high one.

mod cv;
mod emotion;
mod eval;
mod kmeans;
mod knn;
mod metrics;
mod rating;
mod session;

use thiserror::Error;

pub use cv::{make_cv_splits, CvSplit};
pub use emotion::{train_emotion_dnn, EmotionClassifier, EmotionConfig};
pub use eval::{
    aggregate, evaluate_behavior, evaluate_emotion, mean_and_stderr, Aggregate, EvalConfig,
    FoldResult, Method, Prediction,
};
pub use kmeans::{
    kmeans_fit, kmeans_label_clusters, kmeans_predict_session, label_clusters_from_seeds,
    KMeansModel, MAX_LLOYD_ITERS, MAX_SEED_DRAWS,
};
pub use knn::{knn_predict_point, knn_predict_session, KnnIndex};
pub use metrics::{metrics, ClassCounts, Metrics};
pub use rating::{
    median, normalize_rating, predict_session_rating, sliding_windows, svr_fit_1d,
    train_rating_estimator, RatingConfig, RatingEstimator, SvrParams, Window, WINDOW_SIZE,
};
pub use session::{
    read_sessions, select_extremes, write_sessions, BinarizedSession, LabeledSession,
    SessionTarget,
};

use crate::neural::NeuralError;

#[derive(Debug, Error)]
pub enum DownstreamError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("k-means needs at least {k} distinct points, found {distinct}")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("seed sessions kept selecting the same centroid after {0} draws")]
    SeedConflict(usize),
    #[error("k = {k} exceeds the {n} training points")]
    KTooLarge { k: usize, n: usize },
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the largest count; ties go to the lowest index.
pub(crate) fn argmax_count(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}
