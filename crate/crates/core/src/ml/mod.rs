//! Classifier kernels written from scratch: weighted logistic regression,
//! Gaussian naive Bayes, a soft-margin SVM and a random forest.
//!
//! Binary labels are `bool`, `true` meaning the positive class `C1`.
//! Multiclass labels are class indices `0..n_classes`.

mod forest;
mod lr;
mod nb;
mod svm;

pub use forest::{
    gini, rf_train, rf_train_grid, ForestConfig, ForestModel, GridPoint, GridReport, Node, Tree,
    DEFAULT_DEPTHS, DEFAULT_TREE_COUNTS,
};
pub use lr::{
    decide, log_loss_gradient, lr_train, sigmoid, weighted_log_loss, LinearModel, LrConfig,
    PROBABILITY_EPSILON,
};
pub use nb::{nb_train, NbModel, VARIANCE_FLOOR};
pub use svm::{svm_train, Kernel, KernelKind, SvmConfig, SvmModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(|i| self.row(i))
    }

    /// Rows `indices` restricted to `columns`, in the given orders.
    pub fn select(&self, indices: &[usize], columns: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * columns.len());
        for &i in indices {
            let r = self.row(i);
            data.extend(columns.iter().map(|&c| r[c]));
        }
        Matrix {
            rows: indices.len(),
            cols: columns.len(),
            data,
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Cost weight `w` of the positive class and the effective-count ratio
/// `r = w·m1/m2` it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeighting {
    pub positive_weight: f64,
    pub ratio: f64,
}

impl Default for ClassWeighting {
    fn default() -> Self {
        Self::UNIT
    }
}

impl ClassWeighting {
    pub const UNIT: ClassWeighting = ClassWeighting {
        positive_weight: 1.0,
        ratio: 1.0,
    };

    /// `w = r·m2/m1` for `m1` positive and `m2` negative labels.
    pub fn from_ratio(ratio: f64, labels: &[bool]) -> Result<Self> {
        if !(ratio > 0.0 && ratio.is_finite()) {
            return Err(Error::invalid("ratio", "must be positive and finite"));
        }
        let m1 = labels.iter().filter(|&&y| y).count();
        let m2 = labels.len() - m1;
        if m1 == 0 || m2 == 0 {
            return Err(Error::InsufficientClass {
                class: usize::from(m1 > 0),
                count: 0,
                required: 1,
            });
        }
        Ok(Self {
            positive_weight: ratio * m2 as f64 / m1 as f64,
            ratio,
        })
    }

    pub fn weight(&self, positive: bool) -> f64 {
        if positive {
            self.positive_weight
        } else {
            1.0
        }
    }
}

pub(crate) fn require_both_classes(labels: &[bool]) -> Result<()> {
    let m1 = labels.iter().filter(|&&y| y).count();
    if m1 == 0 || m1 == labels.len() {
        return Err(Error::InsufficientClass {
            class: usize::from(m1 > 0),
            count: 0,
            required: 1,
        });
    }
    Ok(())
}

/// Document version written by [`ModelDocument`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    LogisticRegression(LinearModel),
    NaiveBayes(NbModel),
    Svm(SvmModel),
    RandomForest(ForestModel),
}

impl Model {
    /// Binary prediction: positive-class probability against `boundary` for
    /// LR and NB, sign for SVM, vote for RF. NB and RF models trained on
    /// binary labels use class index 1 for the positive class.
    pub fn predict_binary(&self, x: &[f64], boundary: f64) -> Result<bool> {
        match self {
            Model::LogisticRegression(m) => Ok(decide(m.predict_proba(x)?, boundary)),
            Model::NaiveBayes(m) => Ok(decide(m.predict_proba(x)?[1], boundary)),
            Model::Svm(m) => m.predict(x),
            Model::RandomForest(m) => Ok(m.predict(x)? == 1),
        }
    }
}

/// Versioned JSON container for a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(model: Model) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(json)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format {}",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighting_from_ratio() {
        let labels = [true, false, false, false, false, false];
        let w = ClassWeighting::from_ratio(1.0, &labels).unwrap();
        assert_eq!(w.positive_weight, 5.0);
        let w = ClassWeighting::from_ratio(2.0, &labels).unwrap();
        assert_eq!(w.positive_weight, 10.0);
        assert!(ClassWeighting::from_ratio(1.0, &[true, true]).is_err());
    }

    #[test]
    fn select_rows_and_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let s = m.select(&[1, 0], &[2, 0]);
        assert_eq!(s.row(0), &[6.0, 4.0]);
        assert_eq!(s.row(1), &[3.0, 1.0]);
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
