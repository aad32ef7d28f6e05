use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fourier::{fit_fourier, COEFFICIENTS_PER_SIGNAL, FOURIER_ORDER};
use crate::error::{Error, Result};
use crate::solver::Waveforms;

/// The six probe measurements, in feature block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measurement {
    Q3,
    Q2,
    Q1,
    P3,
    P2,
    P1,
}

pub const FEATURE_COUNT: usize = 6 * COEFFICIENTS_PER_SIGNAL;

impl Measurement {
    /// Feature block order.
    pub const ALL: [Measurement; 6] = [
        Measurement::Q3,
        Measurement::Q2,
        Measurement::Q1,
        Measurement::P3,
        Measurement::P2,
        Measurement::P1,
    ];

    pub fn block(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Measurement::Q3 => "Q3",
            Measurement::Q2 => "Q2",
            Measurement::Q1 => "Q1",
            Measurement::P3 => "P3",
            Measurement::P2 => "P2",
            Measurement::P1 => "P1",
        }
    }

    /// Swaps the two iliac probes.
    pub fn mirror(self) -> Self {
        match self {
            Measurement::Q3 => Measurement::Q2,
            Measurement::Q2 => Measurement::Q3,
            Measurement::P3 => Measurement::P2,
            Measurement::P2 => Measurement::P3,
            m => m,
        }
    }

    pub fn signal(self, w: &Waveforms) -> &[f64] {
        match self {
            Measurement::Q3 => &w.q3,
            Measurement::Q2 => &w.q2,
            Measurement::Q1 => &w.q1,
            Measurement::P3 => &w.p3,
            Measurement::P2 => &w.p2,
            Measurement::P1 => &w.p1,
        }
    }

    /// Column indices of this measurement's coefficients.
    pub fn columns(self) -> std::ops::Range<usize> {
        let start = self.block() * COEFFICIENTS_PER_SIGNAL;
        start..start + COEFFICIENTS_PER_SIGNAL
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measurement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measurement::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid("measurement", format!("unknown measurement `{s}`")))
    }
}

/// Column names of the 66 features, e.g. `q3_b0`, `q3_a1`, ..., `p1_b5`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for m in Measurement::ALL {
        let prefix = m.name().to_ascii_lowercase();
        names.push(format!("{prefix}_b0"));
        for n in 1..=FOURIER_ORDER {
            names.push(format!("{prefix}_a{n}"));
            names.push(format!("{prefix}_b{n}"));
        }
    }
    names
}

/// Raw Fourier features of one patient and the reconstruction error of
/// each signal, both in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedFeatures {
    pub values: Vec<f64>,
    pub reconstruction_errors: [f64; 6],
}

pub fn extract_features(waveforms: &Waveforms) -> Result<ExtractedFeatures> {
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    let mut reconstruction_errors = [0.0; 6];
    for m in Measurement::ALL {
        let fit = fit_fourier(m.signal(waveforms), FOURIER_ORDER)?;
        values.extend_from_slice(&fit.coefficients);
        reconstruction_errors[m.block()] = fit.relative_error;
    }
    Ok(ExtractedFeatures {
        values,
        reconstruction_errors,
    })
}

/// Per-feature Z-score statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    /// Statistics of `rows[i]` for `i` in `train`. `names` labels the
    /// features in errors.
    pub fn fit(rows: &[Vec<f64>], train: &[usize], names: &[String]) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::Data(format!(
                "standardization needs at least 2 training rows, got {}",
                train.len()
            )));
        }
        let d = rows[train[0]].len();
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in train {
            for (m, x) in mean.iter_mut().zip(&rows[i]) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in train {
            for ((v, x), m) in var.iter_mut().zip(&rows[i]).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
        for (j, &s) in std.iter().enumerate() {
            if !(s > 1e-12 * mean[j].abs()) {
                let feature = names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
                return Err(Error::ZeroVariance { feature });
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn two_point_column() {
        let rows = vec![vec![1.0], vec![3.0]];
        let s = Standardization::fit(&rows, &[0, 1], &names(1)).unwrap();
        assert_eq!(s.apply_all(&rows), vec![vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn training_columns_have_zero_mean_unit_variance() {
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![(i as f64 * 0.7).sin() * 1e4 + 2e4, i as f64 * 1e-6])
            .collect();
        let train: Vec<usize> = (0..50).collect();
        let s = Standardization::fit(&rows, &train, &names(2)).unwrap();
        let z = s.apply_all(&rows);
        for j in 0..2 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(
                mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12,
                "{mean} {var}"
            );
        }
    }

    #[test]
    fn shifted_test_rows_keep_the_shift() {
        let delta = 0.75;
        let train: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sqrt()]).collect();
        let mut rows = train.clone();
        rows.extend(train.iter().map(|r| vec![r[0] + delta]));
        let idx: Vec<usize> = (0..40).collect();
        let s = Standardization::fit(&rows, &idx, &names(1)).unwrap();
        let test_mean = rows[40..].iter().map(|r| s.apply(r)[0]).sum::<f64>() / 40.0;
        assert!((test_mean - delta / s.std[0]).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_is_named_in_the_error() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        match Standardization::fit(&rows, &[0, 1], &names(2)) {
            Err(Error::ZeroVariance { feature }) => assert_eq!(feature, "f1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn block_layout() {
        let n = feature_names();
        assert_eq!(n.len(), 66);
        assert_eq!(&n[..3], ["q3_b0", "q3_a1", "q3_b1"]);
        assert_eq!(n[65], "p1_b5");
        assert_eq!(Measurement::P1.columns(), 55..66);
        assert_eq!(Measurement::Q3.mirror(), Measurement::Q2);
        assert_eq!(Measurement::P1.mirror(), Measurement::P1);
    }
}
