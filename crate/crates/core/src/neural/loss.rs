use crate::affect::AffectLabel;

use super::tensor::log_softmax;

/// Mean negative log-likelihood over unmasked positions, with its
/// gradient on the logits. `mask[t] == false` marks padding.
pub fn seq_cross_entropy(logits: &[Vec<f64>], targets: &[u32], mask: &[bool]) -> (f64, Vec<Vec<f64>>) {
    debug_assert_eq!(logits.len(), targets.len());
    debug_assert_eq!(logits.len(), mask.len());
    let count = mask.iter().filter(|&&m| m).count();
    let mut grads = Vec::with_capacity(logits.len());
    let mut total = 0.0;
    for ((l, &y), &m) in logits.iter().zip(targets).zip(mask) {
        if !m {
            grads.push(vec![0.0; l.len()]);
            continue;
        }
        let lp = log_softmax(l);
        total -= lp[y as usize];
        let scale = 1.0 / count as f64;
        let mut g: Vec<f64> = lp.iter().map(|v| v.exp() * scale).collect();
        g[y as usize] -= scale;
        grads.push(g);
    }
    let loss = if count == 0 { 0.0 } else { total / count as f64 };
    (loss, grads)
}

/// `−ln p(label)`; zero for Unlabeled.
pub fn label_cross_entropy(probs: &[f64], label: AffectLabel) -> f64 {
    match label.class_index() {
        Some(c) => -probs[c].ln(),
        None => 0.0,
    }
}

/// Masked batch mean of [`label_cross_entropy`] and its gradient on each
/// item's logits (`(p − onehot) / n_labeled`). Unlabeled items get an
/// all-zero gradient and are excluded from the denominator.
pub fn label_cross_entropy_batch(probs: &[Vec<f64>], labels: &[AffectLabel]) -> (f64, Vec<Vec<f64>>) {
    let labeled = labels.iter().filter(|l| l.class_index().is_some()).count();
    let mut total = 0.0;
    let grads = probs
        .iter()
        .zip(labels)
        .map(|(p, &label)| match label.class_index() {
            Some(c) => {
                total += label_cross_entropy(p, label);
                let scale = 1.0 / labeled as f64;
                let mut g: Vec<f64> = p.iter().map(|v| v * scale).collect();
                g[c] -= scale;
                g
            }
            None => vec![0.0; p.len()],
        })
        .collect();
    let loss = if labeled == 0 { 0.0 } else { total / labeled as f64 };
    (loss, grads)
}

/// `J = λ·L1 + (1 − λ)·L2`
pub fn combined_loss(l1: f64, l2: f64, lambda: f64) -> f64 {
    assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
    lambda * l1 + (1.0 - lambda) * l2
}
