use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of uniformly spaced decision boundaries in `[0, 1]`.
pub const DEFAULT_BOUNDARIES: usize = 201;

pub fn boundary_grid(points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub boundary: f64,
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
}

/// Healthy-class ROC curve of a rule that predicts healthy when the
/// largest disease probability lies below the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// One point per requested boundary, in boundary order.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under the empirical curve through every distinct
    /// score.
    pub auc: f64,
}

fn rates(scores: &[f64], healthy: &[bool], below: impl Fn(f64) -> bool) -> (f64, f64) {
    let (mut tp, mut fp, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &h) in scores.iter().zip(healthy) {
        if h {
            pos += 1;
            tp += usize::from(below(s));
        } else {
            neg += 1;
            fp += usize::from(below(s));
        }
    }
    (fp as f64 / neg as f64, tp as f64 / pos as f64)
}

/// `scores` are the largest disease probabilities, `healthy` the truth.
pub fn roc_curve(scores: &[f64], healthy: &[bool], boundaries: &[f64]) -> Result<RocCurve> {
    if scores.len() != healthy.len() {
        return Err(Error::DimensionMismatch {
            expected: healthy.len(),
            found: scores.len(),
        });
    }
    let pos = healthy.iter().filter(|&&h| h).count();
    if pos == 0 || pos == healthy.len() {
        return Err(Error::Data(
            "ROC curve needs both healthy and diseased rows".into(),
        ));
    }
    let points = boundaries
        .iter()
        .map(|&b| {
            let (fpr, tpr) = rates(scores, healthy, |s| s < b);
            RocPoint {
                boundary: b,
                false_positive_rate: fpr,
                true_positive_rate: tpr,
            }
        })
        .collect();

    let mut pairs: Vec<(f64, bool)> = scores
        .iter()
        .copied()
        .zip(healthy.iter().copied())
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let neg = (healthy.len() - pos) as f64;
    let pos = pos as f64;
    let (mut tp, mut fp, mut auc) = (0.0, 0.0, 0.0);
    let mut i = 0;
    while i < pairs.len() {
        let (mut dtp, mut dfp) = (0.0, 0.0);
        let s = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == s {
            if pairs[i].1 {
                dtp += 1.0;
            } else {
                dfp += 1.0;
            }
            i += 1;
        }
        auc += (dfp / neg) * (tp + 0.5 * dtp) / pos;
        tp += dtp;
        fp += dfp;
    }
    debug_assert!(fp == neg);
    Ok(RocCurve { points, auc })
}

/// Probability that a healthy row scores below a diseased one, ties
/// counting one half.
pub fn mann_whitney_auc(scores: &[f64], healthy: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (&sh, _) in scores.iter().zip(healthy).filter(|(_, &h)| h) {
        for (&sd, _) in scores.iter().zip(healthy).filter(|(_, &h)| !h) {
            pairs += 1.0;
            wins += if sh < sd {
                1.0
            } else if sh == sd {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / pairs
}
