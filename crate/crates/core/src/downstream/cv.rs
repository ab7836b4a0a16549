use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// One leave-one-group-out fold. `train`/`test` hold positions into the
/// slice given to [`make_cv_splits`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvSplit {
    pub fold: usize,
    pub held_out_group: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per distinct group id, in group-id order. Panics if the folds
/// fail to partition the items (never expected).
pub fn make_cv_splits<S: AsRef<str>>(groups: &[S]) -> Vec<CvSplit> {
    let mut by_group: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        by_group.entry(g.as_ref()).or_default().push(i);
    }
    let splits: Vec<CvSplit> = by_group
        .iter()
        .enumerate()
        .map(|(fold, (&group, test))| CvSplit {
            fold,
            held_out_group: group.to_string(),
            train: (0..groups.len())
                .filter(|&i| groups[i].as_ref() != group)
                .collect(),
            test: test.clone(),
        })
        .collect();

    let mut seen = vec![0usize; groups.len()];
    for s in &splits {
        assert!(
            s.train.iter().all(|&i| groups[i].as_ref() != s.held_out_group),
            "held-out group leaked into training"
        );
        s.test.iter().for_each(|&i| seen[i] += 1);
    }
    assert!(seen.iter().all(|&c| c == 1), "folds do not partition the items");
    splits
}
