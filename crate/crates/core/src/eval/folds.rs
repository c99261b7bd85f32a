use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::eeg::{ClassLabel, N_CLASSES};
use crate::rng::rng_from_seed;

/// Assignment of trials to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// `assignments[i]` is the fold of trial `i`.
    pub assignments: Vec<usize>,
    pub stratified: bool,
    pub seed: u64,
}

impl FoldPlan {
    /// Trial indices held out in `fold`.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Partitions trials (not windows) into `n` folds.
///
/// Stratified plans shuffle each class separately and deal its trials
/// round-robin, continuing the deal across classes, so per-class counts and
/// fold sizes differ by at most one.
pub fn make_folds(labels: &[ClassLabel], n: usize, seed: u64, stratified: bool) -> Result<FoldPlan, EvalError> {
    if n < 2 {
        return Err(EvalError::InvalidConfig(format!("need at least 2 folds, got {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut assignments = vec![usize::MAX; labels.len()];
    let groups: Vec<Vec<usize>> = if stratified {
        let mut groups = vec![Vec::new(); N_CLASSES];
        for (i, l) in labels.iter().enumerate() {
            groups[l.index()].push(i);
        }
        for (class, g) in groups.iter().enumerate() {
            if !g.is_empty() && g.len() < n {
                return Err(EvalError::TooFewTrials {
                    needed: n,
                    found: g.len(),
                    class: Some(class),
                });
            }
        }
        groups
    } else {
        if labels.len() < n {
            return Err(EvalError::TooFewTrials { needed: n, found: labels.len(), class: None });
        }
        vec![(0..labels.len()).collect()]
    };
    let mut next = 0;
    for mut group in groups {
        group.shuffle(&mut rng);
        for i in group {
            assignments[i] = next % n;
            next += 1;
        }
    }
    Ok(FoldPlan { n_folds: n, assignments, stratified, seed })
}
