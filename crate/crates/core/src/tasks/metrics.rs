use serde::{Deserialize, Serialize};

/// Counts for the positive class `C1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(predicted: &[bool], truth: &[bool]) -> Self {
        let mut c = Confusion::default();
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (false, true) => c.fn_ += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    /// Confusion of class `class` against the rest.
    pub fn one_vs_rest(predicted: &[usize], truth: &[usize], class: usize) -> Self {
        let p: Vec<bool> = predicted.iter().map(|&c| c == class).collect();
        let t: Vec<bool> = truth.iter().map(|&c| c == class).collect();
        Self::from_predictions(&p, &t)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// `(δ²+1)𝒫ℛ/(δ²𝒫+ℛ)`; `None` when the denominator vanishes.
pub fn f_score(precision: f64, recall: f64, delta: f64) -> Option<f64> {
    let d2 = delta * delta;
    let den = d2 * precision + recall;
    if den > 0.0 {
        Some((d2 + 1.0) * precision * recall / den)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    /// `TP/(TP+FN)`, equal to the recall.
    pub sensitivity: f64,
    /// `TN/(TN+FP)`.
    pub specificity: f64,
    /// `w·TP/(w·TP+FP)` with `w = precision_weight`.
    pub precision: f64,
    pub recall: f64,
    /// Zero when undefined, see `f_defined`.
    pub f_score: f64,
    pub f_defined: bool,
    pub delta: f64,
    pub precision_weight: f64,
}

impl Metrics {
    /// Metrics with true positives counted `precision_weight` times in the
    /// precision, matching the effective class counts of a weighted loss.
    pub fn new(confusion: Confusion, precision_weight: f64, delta: f64) -> Self {
        let (tp, fn_, fp, tn) = (
            confusion.tp as f64,
            confusion.fn_ as f64,
            confusion.fp as f64,
            confusion.tn as f64,
        );
        let sensitivity = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let weighted_tp = precision_weight * tp;
        let precision = if tp + fp > 0.0 {
            weighted_tp / (weighted_tp + fp)
        } else {
            0.0
        };
        let f = if sensitivity.is_nan() {
            None
        } else {
            f_score(precision, sensitivity, delta)
        };
        Metrics {
            confusion,
            sensitivity,
            specificity,
            precision,
            recall: sensitivity,
            f_score: f.unwrap_or(0.0),
            f_defined: f.is_some(),
            delta,
            precision_weight,
        }
    }

    pub fn f1(confusion: Confusion) -> Self {
        Self::new(confusion, 1.0, 1.0)
    }
}

/// Means over folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub f_score: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

impl MeanMetrics {
    pub fn of(metrics: &[Metrics]) -> Self {
        let n = metrics.len() as f64;
        let mean = |f: fn(&Metrics) -> f64| metrics.iter().map(f).sum::<f64>() / n;
        MeanMetrics {
            f_score: mean(|m| m.f_score),
            sensitivity: mean(|m| m.sensitivity),
            specificity: mean(|m| m.specificity),
        }
    }
}
