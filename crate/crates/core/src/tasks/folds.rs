use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

pub const DEFAULT_FOLDS: usize = 5;
pub const TRAIN_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Independent random train/test partitions of the same rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

/// Stratified splits: within each fold every class puts
/// `round(2/3 · n_class)` of its rows in the training set. Index lists are
/// sorted.
pub fn split_folds(labels: &[usize], seed: u64, folds: usize) -> Result<FoldPlan> {
    if labels.len() < 6 {
        return Err(Error::Data(format!(
            "need at least 6 rows to split, got {}",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &c) in labels.iter().enumerate() {
        members[c].push(i);
    }
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < 2 {
            return Err(Error::InsufficientClass {
                class: c,
                count: m.len(),
                required: 2,
            });
        }
    }
    let folds = (0..folds)
        .map(|k| {
            let mut rng = substream(seed, k as u64);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for m in &members {
                let mut shuffled = m.clone();
                shuffled.shuffle(&mut rng);
                let n_train = (TRAIN_FRACTION * m.len() as f64).round() as usize;
                train.extend_from_slice(&shuffled[..n_train]);
                test.extend_from_slice(&shuffled[n_train..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Fold { train, test }
        })
        .collect();
    Ok(FoldPlan { folds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_balanced_rows() {
        let plan = split_folds(&[0, 1, 0, 1, 0, 1], 1, 5).unwrap();
        assert_eq!(plan.folds.len(), 5);
        for f in &plan.folds {
            assert_eq!((f.train.len(), f.test.len()), (4, 2));
            let mut all: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
        }
    }

    #[test]
    fn class_proportions_are_kept() {
        let labels: Vec<usize> = (0..301).map(|i| [0, 0, 0, 1, 2, 3][i % 6]).collect();
        let plan = split_folds(&labels, 3, 5).unwrap();
        for f in &plan.folds {
            for c in 0..4 {
                let total = labels.iter().filter(|&&l| l == c).count() as f64;
                let in_train = f.train.iter().filter(|&&i| labels[i] == c).count() as f64;
                assert!((in_train - total * 2.0 / 3.0).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn seeds_change_partitions() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let a = split_folds(&labels, 1, 5).unwrap();
        let b = split_folds(&labels, 2, 5).unwrap();
        assert_ne!(a.folds[0], b.folds[0]);
        assert_ne!(a.folds[0], a.folds[1]);
    }

    #[test]
    fn singleton_class_is_rejected() {
        assert!(matches!(
            split_folds(&[0, 0, 0, 0, 0, 1], 1, 5),
            Err(Error::InsufficientClass { class: 1, .. })
        ));
    }
}
