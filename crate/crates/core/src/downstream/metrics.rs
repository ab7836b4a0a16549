use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    /// Items whose truth is this class.
    pub support: usize,
    pub correct: usize,
    /// Items predicted as this class.
    pub predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// Mean of per-class recalls over classes that occur in the truths.
    pub weighted_accuracy: f64,
    pub per_class: Vec<ClassCounts>,
}

/// Panics if the slices differ in length or a label is `>= n_classes`.
pub fn metrics(predictions: &[usize], truths: &[usize], n_classes: usize) -> Metrics {
    assert_eq!(predictions.len(), truths.len(), "prediction/truth length mismatch");
    let mut per_class = vec![ClassCounts::default(); n_classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        per_class[t].support += 1;
        per_class[p].predicted += 1;
        if p == t {
            per_class[t].correct += 1;
        }
    }
    let correct: usize = per_class.iter().map(|c| c.correct).sum();
    let recalls: Vec<f64> = per_class
        .iter()
        .filter(|c| c.support > 0)
        .map(|c| c.correct as f64 / c.support as f64)
        .collect();
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Metrics {
        accuracy: if truths.is_empty() {
            0.0
        } else {
            correct as f64 / truths.len() as f64
        },
        weighted_accuracy: mean(&recalls),
        per_class,
    }
}
