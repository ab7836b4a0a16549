use super::{argmax_count, sq_dist, DownstreamError};

/// Labeled training embeddings for nearest-neighbor voting.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIndex {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    n_classes: usize,
}

impl KnnIndex {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self, DownstreamError> {
        if points.len() != labels.len() {
            return Err(DownstreamError::Invalid("points and labels differ in length".into()));
        }
        if points.is_empty() {
            return Err(DownstreamError::Empty("k-NN training set"));
        }
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(KnnIndex {
            points,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Majority label among the `k` nearest training points (Euclidean).
/// Equidistant neighbors are ordered by training index; vote ties go to
/// the lowest label.
pub fn knn_predict_point(index: &KnnIndex, x: &[f64], k: usize) -> Result<usize, DownstreamError> {
    if k == 0 {
        return Err(DownstreamError::Invalid("k must be positive".into()));
    }
    if k > index.len() {
        return Err(DownstreamError::KTooLarge { k, n: index.len() });
    }
    let mut d: Vec<(f64, usize)> = index
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| (sq_dist(p, x), i))
        .collect();
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, by_dist);
    }
    let mut votes = vec![0usize; index.n_classes];
    for &(_, i) in &d[..k] {
        votes[index.labels[i]] += 1;
    }
    Ok(argmax_count(&votes))
}

/// Majority over the per-embedding k-NN labels; ties go to the lowest label.
pub fn knn_predict_session(
    index: &KnnIndex,
    session: &[Vec<f64>],
    k: usize,
) -> Result<usize, DownstreamError> {
    if session.is_empty() {
        return Err(DownstreamError::Empty("session"));
    }
    let mut votes = vec![0usize; index.n_classes];
    for e in session {
        votes[knn_predict_point(index, e, k)?] += 1;
    }
    Ok(argmax_count(&votes))
}
