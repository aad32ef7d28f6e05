use serde::{Deserialize, Serialize};

use super::{check_dim, Matrix};
use crate::error::{Error, Result};

/// Lower bound on every fitted variance.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub priors: Vec<f64>,
    /// `means[class][feature]`.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

/// Fits per-class feature means and variances. Priors are the
/// `class_weights`-weighted class frequencies (pass all ones for plain
/// frequencies).
pub fn nb_train(x: &Matrix, labels: &[usize], class_weights: &[f64]) -> Result<NbModel> {
    check_dim(x.rows(), labels.len())?;
    let k = class_weights.len();
    let d = x.cols();
    let mut counts = vec![0usize; k];
    let mut means = vec![vec![0.0; d]; k];
    for (row, &c) in x.iter_rows().zip(labels) {
        if c >= k {
            return Err(Error::Data(format!("label {c} outside 0..{k}")));
        }
        counts[c] += 1;
        means[c].iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(Error::InsufficientClass {
                class: c,
                count: n,
                required: 2,
            });
        }
        means[c].iter_mut().for_each(|m| *m /= n as f64);
    }
    let mut variances = vec![vec![0.0; d]; k];
    for (row, &c) in x.iter_rows().zip(labels) {
        for ((v, m), xi) in variances[c].iter_mut().zip(&means[c]).zip(row) {
            *v += (xi - m).powi(2);
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / n as f64).max(VARIANCE_FLOOR));
    }
    let effective: Vec<f64> = counts
        .iter()
        .zip(class_weights)
        .map(|(&n, w)| n as f64 * w)
        .collect();
    let total: f64 = effective.iter().sum();
    let priors = effective.iter().map(|e| e / total).collect();
    Ok(NbModel {
        priors,
        means,
        variances,
    })
}

impl NbModel {
    /// Unnormalized log posteriors.
    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.means[0].len(), x.len())?;
        Ok((0..self.priors.len())
            .map(|c| {
                let ll: f64 = self.means[c]
                    .iter()
                    .zip(&self.variances[c])
                    .zip(x)
                    .map(|((m, v), xi)| {
                        -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m).powi(2) / v)
                    })
                    .sum();
                self.priors[c].ln() + ll
            })
            .collect())
    }

    /// Class posteriors, summing to one.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lj = self.log_joint(x)?;
        let top = lj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = lj.iter().map(|l| (l - top).exp()).collect();
        let s: f64 = e.iter().sum();
        Ok(e.into_iter().map(|v| v / s).collect())
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn column(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn identical_classes_split_evenly() {
        let x = column(&[-1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
        let m = nb_train(&x, &[0, 0, 0, 1, 1, 1], &[1.0, 1.0]).unwrap();
        for q in [-3.0, 0.2, 5.0] {
            let p = m.predict_proba(&[q]).unwrap();
            assert_eq!(p, vec![0.5, 0.5]);
        }
    }

    #[test]
    fn threshold_matches_the_gaussian_crossing() {
        // Class 0: mean 0, variance 1. Class 1: mean 2, variance 4.
        let x = column(&[-1.0, 1.0, 0.0, 4.0]);
        let m = nb_train(&x, &[0, 0, 1, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(m.means, vec![vec![0.0], vec![2.0]]);
        assert_eq!(m.variances, vec![vec![1.0], vec![4.0]]);
        // x²/2 = (x-2)²/8 + ln 2  ⇔  3x² + 4x - 4 - 8 ln 2 = 0
        let c = -4.0 - 8.0 * 2f64.ln();
        let disc = (16.0 - 12.0 * c).sqrt();
        for root in [(-4.0 + disc) / 6.0, (-4.0 - disc) / 6.0] {
            let p = m.predict_proba(&[root]).unwrap();
            assert!((p[0] - 0.5).abs() < 1e-12, "{root} {p:?}");
        }
        let inner = (-4.0 + disc) / 6.0;
        assert_eq!(m.predict(&[inner - 1e-6]).unwrap(), 0);
        assert_eq!(m.predict(&[inner + 1e-6]).unwrap(), 1);
    }

    #[test]
    fn variance_floor_and_small_class() {
        let x = column(&[1.0, 1.0, 2.0, 3.0]);
        let m = nb_train(&x, &[0, 0, 1, 1], &[1.0, 1.0]).unwrap();
        assert_eq!(m.variances[0][0], VARIANCE_FLOOR);
        assert!(matches!(
            nb_train(&x, &[0, 1, 1, 1], &[1.0, 1.0]),
            Err(Error::InsufficientClass {
                class: 0,
                count: 1,
                ..
            })
        ));
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one(
            pts in proptest::collection::vec(-5.0f64..5.0, 9),
            q in proptest::collection::vec(-10.0f64..10.0, 3),
        ) {
            let x = Matrix::new(3, 3, pts).unwrap();
            let x = Matrix::from_rows(&[x.row(0).to_vec(), x.row(1).to_vec(), x.row(2).to_vec(),
                x.row(0).iter().map(|v| v + 1.0).collect(), x.row(1).iter().map(|v| -v).collect(),
                x.row(2).iter().map(|v| v * 0.5).collect()]).unwrap();
            let m = nb_train(&x, &[0, 1, 2, 0, 1, 2], &[1.0, 2.0, 1.0]).unwrap();
            let p = m.predict_proba(&q).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
