use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax_count, sq_dist, DownstreamError};

pub const MAX_LLOYD_ITERS: usize = 300;
/// Seed-session draws before giving up on conflicting seeds.
pub const MAX_SEED_DRAWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub centroids: Vec<Vec<f64>>,
    /// Class label of each centroid once seeded.
    pub labels: Vec<Option<usize>>,
    /// Within-cluster sum of squares at convergence.
    pub wcss: f64,
    /// WCSS after every assignment step of the selected restart.
    pub wcss_trace: Vec<f64>,
}

impl KMeansModel {
    /// Nearest centroid; ties go to the lower index.
    pub fn nearest(&self, x: &[f64]) -> usize {
        nearest(&self.centroids, x).0
    }
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn distinct_points(points: &[Vec<f64>]) -> Vec<usize> {
    let mut keyed: Vec<(Vec<u64>, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (p.iter().map(|v| v.to_bits()).collect(), i))
        .collect();
    keyed.sort();
    keyed.dedup_by(|a, b| a.0 == b.0);
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, f64, Vec<f64>) {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assign: Vec<usize> = vec![usize::MAX; points.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        let mut wcss = 0.0;
        for (a, p) in assign.iter_mut().zip(points) {
            let (c, d) = nearest(&centroids, p);
            changed |= *a != c;
            *a = c;
            wcss += d;
        }
        trace.push(wcss);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                continue;
            }
            // empty cluster: move it onto the point farthest from its centroid
            let far = (0..points.len())
                .filter(|&i| !taken[i])
                .max_by(|&i, &j| {
                    sq_dist(&points[i], &centroids[assign[i]])
                        .total_cmp(&sq_dist(&points[j], &centroids[assign[j]]))
                        .then(j.cmp(&i))
                })
                .expect("more points than clusters");
            taken[far] = true;
            centroids[c] = points[far].clone();
        }
    }
    let wcss = *trace.last().expect("at least one iteration");
    (centroids, wcss, trace)
}

/// Lloyd's algorithm from `restarts` random initializations (k distinct
/// data points each); keeps the run with the lowest WCSS.
pub fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansModel, DownstreamError> {
    if k == 0 {
        return Err(DownstreamError::Invalid("k-means needs k >= 1".into()));
    }
    if points.iter().any(|p| p.len() != points[0].len()) {
        return Err(DownstreamError::Invalid("points of mixed dimension".into()));
    }
    let distinct = distinct_points(points);
    if distinct.len() < k {
        return Err(DownstreamError::TooFewPoints {
            k,
            distinct: distinct.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansModel> = None;
    for _ in 0..restarts.max(1) {
        let init: Vec<Vec<f64>> = distinct
            .choose_multiple(&mut rng, k)
            .map(|&i| points[i].clone())
            .collect();
        let (centroids, wcss, wcss_trace) = lloyd(points, init);
        if best.as_ref().map_or(true, |b| wcss < b.wcss) {
            best = Some(KMeansModel {
                labels: vec![None; k],
                centroids,
                wcss,
                wcss_trace,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

fn majority_centroid(model: &KMeansModel, session: &[Vec<f64>]) -> usize {
    let mut counts = vec![0usize; model.centroids.len()];
    for e in session {
        counts[model.nearest(e)] += 1;
    }
    argmax_count(&counts)
}

/// Labels the majority-nearest centroid of each `(label, session)` seed,
/// then gives every other centroid the label of its nearest labeled
/// centroid. Two seeds landing on one centroid is a conflict.
pub fn label_clusters_from_seeds(
    model: &mut KMeansModel,
    seeds: &[(usize, &[Vec<f64>])],
) -> Result<(), DownstreamError> {
    if seeds.is_empty() || seeds.iter().any(|(_, s)| s.is_empty()) {
        return Err(DownstreamError::Empty("seed session"));
    }
    let mut labels = vec![None; model.centroids.len()];
    for &(label, session) in seeds {
        let c = majority_centroid(model, session);
        if labels[c].is_some() {
            return Err(DownstreamError::SeedConflict(1));
        }
        labels[c] = Some(label);
    }
    let labeled: Vec<usize> = (0..labels.len()).filter(|&c| labels[c].is_some()).collect();
    for c in 0..labels.len() {
        if labels[c].is_none() {
            let mut best = (labeled[0], f64::INFINITY);
            for &l in &labeled {
                let d = sq_dist(&model.centroids[c], &model.centroids[l]);
                if d < best.1 {
                    best = (l, d);
                }
            }
            labels[c] = labels[best.0];
        }
    }
    model.labels = labels;
    Ok(())
}

/// Draws one seed session per class from `sessions` and labels the
/// centroids; conflicting draws are retried up to [`MAX_SEED_DRAWS`] times.
pub fn kmeans_label_clusters(
    model: &mut KMeansModel,
    sessions: &[(usize, &[Vec<f64>])],
    seed: u64,
) -> Result<(), DownstreamError> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (label, s)) in sessions.iter().enumerate() {
        if !s.is_empty() {
            by_class.entry(*label).or_default().push(i);
        }
    }
    if by_class.is_empty() {
        return Err(DownstreamError::Empty("seed session pool"));
    }
    if by_class.len() > model.centroids.len() {
        return Err(DownstreamError::Invalid(format!(
            "{} classes cannot be seeded onto {} centroids",
            by_class.len(),
            model.centroids.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_SEED_DRAWS {
        let seeds: Vec<(usize, &[Vec<f64>])> = by_class
            .iter()
            .map(|(&label, idx)| {
                let i = *idx.choose(&mut rng).expect("non-empty class");
                (label, sessions[i].1)
            })
            .collect();
        match label_clusters_from_seeds(model, &seeds) {
            Err(DownstreamError::SeedConflict(_)) => continue,
            other => return other,
        }
    }
    Err(DownstreamError::SeedConflict(MAX_SEED_DRAWS))
}

/// Label of the centroid most of the session's embeddings are nearest to;
/// count ties go to the lower centroid index.
pub fn kmeans_predict_session(model: &KMeansModel, session: &[Vec<f64>]) -> Result<usize, DownstreamError> {
    if session.is_empty() {
        return Err(DownstreamError::Empty("session"));
    }
    let c = majority_centroid(model, session);
    model.labels[c].ok_or_else(|| DownstreamError::Invalid("k-means centroids are not labeled".into()))
}
