use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DownstreamError;
use crate::neural::tensor::sigmoid;
use crate::neural::{Linear, LstmCell, OptimizerKind, OptimizerState, ParamSet};

pub const WINDOW_SIZE: usize = 3;

/// `size` consecutive sentence embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub rows: Vec<Vec<f64>>,
    /// The session was shorter than the window and its last embedding was
    /// repeated to fill it.
    pub padded: bool,
}

/// Stride-1 windows. A non-empty session shorter than `size` gives one
/// window padded with copies of its last embedding; an empty one gives none.
pub fn sliding_windows(embeddings: &[Vec<f64>], size: usize) -> Vec<Window> {
    assert!(size > 0, "window size must be positive");
    if embeddings.is_empty() {
        return Vec::new();
    }
    if embeddings.len() < size {
        let mut rows = embeddings.to_vec();
        let last = rows[rows.len() - 1].clone();
        rows.resize(size, last);
        return vec![Window { rows, padded: true }];
    }
    embeddings
        .windows(size)
        .map(|w| Window {
            rows: w.to_vec(),
            padded: false,
        })
        .collect()
}

/// Maps a 1–9 rating onto the sigmoid range.
pub fn normalize_rating(r: f64) -> f64 {
    (r - 1.0) / 8.0
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Linear ε-insensitive regressor `y ≈ slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub slope: f64,
    pub intercept: f64,
    pub epsilon: f64,
    pub c: f64,
}

impl SvrParams {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// `½w² + C·Σ max(0, |y − (wx + b)| − ε)`
    pub fn objective(&self, x: &[f64], y: &[f64]) -> f64 {
        let loss: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| ((yi - self.predict(xi)).abs() - self.epsilon).max(0.0))
            .sum();
        0.5 * self.slope * self.slope + self.c * loss
    }
}

const SVR_ITERS: usize = 20_000;
const SVR_STEP: f64 = 0.5;

/// Fits the 1-D linear ε-SVR by subgradient descent with step
/// `0.5/√(t+1)` for a fixed number of iterations, returning the best
/// iterate. x and y are standardized internally (a reparametrization; the
/// objective minimized is the original one).
pub fn svr_fit_1d(x: &[f64], y: &[f64], epsilon: f64, c: f64) -> Result<SvrParams, DownstreamError> {
    if x.len() != y.len() {
        return Err(DownstreamError::Invalid("x and y differ in length".into()));
    }
    if x.is_empty() {
        return Err(DownstreamError::Empty("regression data"));
    }
    if !(epsilon >= 0.0) || !(c > 0.0) {
        return Err(DownstreamError::Invalid(format!("bad SVR settings ε={epsilon} C={c}")));
    }
    let n = x.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let scale = |v: &[f64], m: f64| {
        let s = (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n).sqrt();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    };
    let (mx, my) = (mean(x), mean(y));
    let (sx, sy) = (scale(x, mx), scale(y, my));
    let xs: Vec<f64> = x.iter().map(|v| (v - mx) / sx).collect();
    let ys: Vec<f64> = y.iter().map(|v| (v - my) / sy).collect();
    let eps = epsilon / sy;
    // objective / (C·n·sy) in standardized coordinates
    let reg = sy / (sx * sx * c * n);
    let obj = |w: f64, b: f64| {
        let loss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(&xi, &yi)| ((yi - w * xi - b).abs() - eps).max(0.0))
            .sum();
        0.5 * reg * w * w + loss / n
    };

    let (mut w, mut b) = (0.0, 0.0);
    let mut best = (obj(w, b), w, b);
    for t in 0..SVR_ITERS {
        let (mut gw, mut gb) = (reg * w, 0.0);
        for (&xi, &yi) in xs.iter().zip(&ys) {
            let r = yi - w * xi - b;
            if r.abs() > eps {
                let s = r.signum();
                gw -= s * xi / n;
                gb -= s / n;
            }
        }
        let step = SVR_STEP / ((t + 1) as f64).sqrt();
        w -= step * gw;
        b -= step * gb;
        let o = obj(w, b);
        if o < best.0 {
            best = (o, w, b);
        }
    }
    let slope = sy * best.1 / sx;
    Ok(SvrParams {
        slope,
        intercept: my + sy * best.2 - slope * mx,
        epsilon,
        c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatingConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub svr_epsilon: f64,
    pub svr_c: f64,
    pub seed: u64,
}

impl Default for RatingConfig {
    fn default() -> Self {
        RatingConfig {
            hidden: 50,
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 8,
            svr_epsilon: 0.1,
            svr_c: 100.0,
            seed: 0,
        }
    }
}

/// Window LSTM with a sigmoid output, followed by a linear SVR from the
/// median window prediction to the session rating.
#[derive(Debug, Clone)]
pub struct RatingEstimator {
    pub params: ParamSet,
    pub lstm: LstmCell,
    pub output: Linear,
    pub svr: SvrParams,
}

struct WindowPass {
    caches: Vec<crate::neural::lstm::LstmCache>,
    h: Vec<f64>,
    p: f64,
}

impl RatingEstimator {
    fn forward(&self, ps: &ParamSet, w: &Window) -> Result<WindowPass, DownstreamError> {
        let n = self.lstm.hidden;
        let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
        let mut caches = Vec::with_capacity(w.rows.len());
        for x in &w.rows {
            let (h2, c2, cache) = self.lstm.forward(ps, x, &h, &c)?;
            h = h2;
            c = c2;
            caches.push(cache);
        }
        let p = sigmoid(self.output.forward(ps, &h)[0]);
        Ok(WindowPass { caches, h, p })
    }

    /// Normalized rating predicted for one window, in (0, 1).
    pub fn window_prediction(&self, w: &Window) -> Result<f64, DownstreamError> {
        Ok(self.forward(&self.params, w)?.p)
    }

    /// Median of the window predictions of a session.
    pub fn session_median(&self, session: &[Vec<f64>]) -> Result<f64, DownstreamError> {
        let preds = sliding_windows(session, WINDOW_SIZE)
            .iter()
            .map(|w| self.window_prediction(w))
            .collect::<Result<Vec<_>, _>>()?;
        median(&preds).ok_or(DownstreamError::Empty("session"))
    }

    /// Accumulates the gradient of `(p − target)²` and returns the loss.
    fn backward(
        &self,
        grads: &mut crate::neural::Grads,
        w: &Window,
        target: f64,
    ) -> Result<f64, DownstreamError> {
        let pass = self.forward(&self.params, w)?;
        let diff = pass.p - target;
        let dz = 2.0 * diff * pass.p * (1.0 - pass.p);
        let mut dh = self.output.backward(&self.params, grads, &pass.h, &[dz]);
        let mut dc = vec![0.0; self.lstm.hidden];
        for cache in pass.caches.iter().rev() {
            let (_, dh_prev, dc_prev) = self.lstm.backward(&self.params, grads, cache, &dh, &dc);
            dh = dh_prev;
            dc = dc_prev;
        }
        Ok(diff * diff)
    }
}

/// Median window prediction → SVR → clamp to [1, 9].
pub fn predict_session_rating(est: &RatingEstimator, session: &[Vec<f64>]) -> Result<f64, DownstreamError> {
    Ok(est.svr.predict(est.session_median(session)?).clamp(1.0, 9.0))
}

/// Trains on `(session embeddings, rating, group)` triples. One group,
/// drawn with the seeded RNG, is held out for selecting the best epoch
/// when there are at least two groups.
pub fn train_rating_estimator(
    sessions: &[(&[Vec<f64>], f64, &str)],
    cfg: &RatingConfig,
) -> Result<RatingEstimator, DownstreamError> {
    let sessions: Vec<_> = sessions.iter().filter(|s| !s.0.is_empty()).collect();
    if sessions.is_empty() {
        return Err(DownstreamError::Empty("rating training set"));
    }
    let input = sessions[0].0[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ParamSet::new();
    let lstm = LstmCell::new(&mut params, "rating.lstm", input, cfg.hidden, &mut rng);
    let output = Linear::new(&mut params, "rating.out", cfg.hidden, 1, &mut rng);
    let mut est = RatingEstimator {
        params,
        lstm,
        output,
        svr: SvrParams {
            slope: 8.0,
            intercept: 1.0,
            epsilon: cfg.svr_epsilon,
            c: cfg.svr_c,
        },
    };

    let groups: Vec<&str> = sessions
        .iter()
        .map(|s| s.2)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let val_group = (groups.len() >= 2).then(|| *groups.choose(&mut rng).expect("groups"));
    let mut train_w = Vec::new();
    let mut val_w = Vec::new();
    for s in &sessions {
        let target = normalize_rating(s.1);
        let dst = if Some(s.2) == val_group {
            &mut val_w
        } else {
            &mut train_w
        };
        dst.extend(sliding_windows(s.0, WINDOW_SIZE).into_iter().map(|w| (w, target)));
    }

    let mut opt = OptimizerState::new(OptimizerKind::Adagrad, cfg.learning_rate, &est.params);
    let mut grads = est.params.zeros_like();
    let mut order: Vec<usize> = (0..train_w.len()).collect();
    let mut best: Option<(f64, ParamSet)> = None;
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.zero();
            for &i in batch {
                est.backward(&mut grads, &train_w[i].0, train_w[i].1)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            if !grads.is_finite() {
                return Err(DownstreamError::Invalid("non-finite rating gradient".into()));
            }
            opt.step(&mut est.params, &grads);
        }
        if !val_w.is_empty() {
            let mut loss = 0.0;
            for (w, t) in &val_w {
                let d = est.window_prediction(w)? - t;
                loss += d * d;
            }
            if best.as_ref().map_or(true, |b| loss < b.0) {
                best = Some((loss, est.params.clone()));
            }
        }
    }
    if let Some((_, p)) = best {
        est.params = p;
    }

    let mut xs = Vec::with_capacity(sessions.len());
    let mut ys = Vec::with_capacity(sessions.len());
    for s in &sessions {
        xs.push(est.session_median(s.0)?);
        ys.push(s.1);
    }
    est.svr = svr_fit_1d(&xs, &ys, cfg.svr_epsilon, cfg.svr_c)?;
    Ok(est)
}
