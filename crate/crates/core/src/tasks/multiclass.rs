use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::combos::MeasurementCombination;
use super::evaluate::{standardized_split, EvalConfig};
use super::folds::FoldPlan;
use super::metrics::Confusion;
use super::roc::{roc_curve, RocCurve};
use crate::error::{Error, Result};
use crate::ml::{lr_train, svm_train, ClassWeighting, LinearModel, Matrix, SvmModel};
use crate::vpd::HealthClass;

const CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// One LR per class against the rest, argmax of probabilities.
    Ova,
    /// One SVM per class pair, modal vote.
    Ovo,
    /// LR per diseased class; healthy unless a disease probability reaches
    /// the boundary.
    Cpc,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Ova => "ova",
            Strategy::Ovo => "ovo",
            Strategy::Cpc => "cpc",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ova" => Ok(Strategy::Ova),
            "ovo" => Ok(Strategy::Ovo),
            "cpc" => Ok(Strategy::Cpc),
            _ => Err(Error::invalid(
                "strategy",
                format!("unknown strategy `{s}` (ova, ovo, cpc)"),
            )),
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// One-vs-rest LR models, one per listed class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub classes: Vec<usize>,
    pub models: Vec<LinearModel>,
}

/// Each model is weighted for its own imbalance with ratio `r`.
pub fn one_vs_rest_train(
    x: &Matrix,
    labels: &[usize],
    classes: &[usize],
    config: &EvalConfig,
) -> Result<OneVsRest> {
    let models = classes
        .iter()
        .map(|&c| {
            let y: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            let w = ClassWeighting::from_ratio(config.ratio, &y)?;
            lr_train(x, &y, &w, &config.lr)
        })
        .collect::<Result<_>>()?;
    Ok(OneVsRest {
        classes: classes.to_vec(),
        models,
    })
}

impl OneVsRest {
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.predict_proba(x)).collect()
    }
}

pub fn ova_train(x: &Matrix, labels: &[usize], config: &EvalConfig) -> Result<OneVsRest> {
    one_vs_rest_train(x, labels, &[0, 1, 2, 3], config)
}

/// Argmax over the four class probabilities.
pub fn ova_predict(probabilities: &[f64]) -> usize {
    argmax_lowest(probabilities)
}

/// `C1` (index 0) when every disease probability is below `boundary`,
/// otherwise `1 +` the argmax over `disease_probabilities`.
pub fn cpc_predict(disease_probabilities: &[f64], boundary: f64) -> usize {
    let top = disease_probabilities
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if top < boundary {
        0
    } else {
        1 + argmax_lowest(disease_probabilities)
    }
}

pub fn cpc_train(x: &Matrix, labels: &[usize], config: &EvalConfig) -> Result<OneVsRest> {
    one_vs_rest_train(x, labels, &[1, 2, 3], config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    /// Positive class of the SVM.
    pub first: usize,
    pub second: usize,
    pub svm: SvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsOne {
    pub pairs: Vec<PairModel>,
}

/// Six pairwise SVMs, each weighted for its pair's imbalance.
pub fn ovo_train(x: &Matrix, labels: &[usize], config: &EvalConfig) -> Result<OneVsOne> {
    let mut pairs = Vec::new();
    for first in 0..CLASSES {
        for second in first + 1..CLASSES {
            let rows: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == first || labels[i] == second)
                .collect();
            let all: Vec<usize> = (0..x.cols()).collect();
            let sub = x.select(&rows, &all);
            let y: Vec<bool> = rows.iter().map(|&i| labels[i] == first).collect();
            let w = ClassWeighting::from_ratio(config.ratio, &y)?;
            pairs.push(PairModel {
                first,
                second,
                svm: svm_train(&sub, &y, &w, &config.svm)?,
            });
        }
    }
    Ok(OneVsOne { pairs })
}

/// Modal class of pairwise winners; ties go to the lowest index.
pub fn ovo_vote(winners: &[usize]) -> usize {
    let mut votes = [0.0; CLASSES];
    winners.iter().for_each(|&w| votes[w] += 1.0);
    argmax_lowest(&votes)
}

impl OneVsOne {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let winners = self
            .pairs
            .iter()
            .map(|p| Ok(if p.svm.predict(x)? { p.first } else { p.second }))
            .collect::<Result<Vec<_>>>()?;
        Ok(ovo_vote(&winners))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: HealthClass,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassReport {
    pub strategy: Strategy,
    pub combination: MeasurementCombination,
    pub boundary: f64,
    pub folds: Vec<Vec<ClassRates>>,
    /// Five-fold means per class.
    pub mean: Vec<ClassRates>,
    /// Healthy-class ROC of CPC over the pooled test rows of all folds.
    pub roc: Option<RocCurve>,
}

fn rates(pred: &[usize], truth: &[usize]) -> Vec<ClassRates> {
    HealthClass::ALL
        .iter()
        .map(|&class| {
            let c = Confusion::one_vs_rest(pred, truth, class.index());
            ClassRates {
                class,
                sensitivity: c.tp as f64 / (c.tp + c.fn_) as f64,
                specificity: c.tn as f64 / (c.tn + c.fp) as f64,
            }
        })
        .collect()
}

/// Per-class sensitivity and specificity of `strategy` over the folds.
/// With `roc_boundaries` and CPC, also the healthy-class ROC curve.
pub fn multiclass_evaluate(
    features: &Matrix,
    classes: &[HealthClass],
    strategy: Strategy,
    combination: MeasurementCombination,
    plan: &FoldPlan,
    config: &EvalConfig,
    roc_boundaries: Option<&[f64]>,
) -> Result<MulticlassReport> {
    config.validate()?;
    let labels: Vec<usize> = classes.iter().map(|c| c.index()).collect();
    let columns = combination.columns();
    let mut folds = Vec::new();
    let (mut scores, mut healthy) = (Vec::new(), Vec::new());
    for fold in &plan.folds {
        let (xtr, xte) = standardized_split(features, &columns, &fold.train, &fold.test)?;
        let ytr: Vec<usize> = fold.train.iter().map(|&i| labels[i]).collect();
        let yte: Vec<usize> = fold.test.iter().map(|&i| labels[i]).collect();
        let pred: Vec<usize> = match strategy {
            Strategy::Ova => {
                let m = ova_train(&xtr, &ytr, config)?;
                xte.iter_rows()
                    .map(|r| Ok(ova_predict(&m.probabilities(r)?)))
                    .collect::<Result<_>>()?
            }
            Strategy::Ovo => {
                let m = ovo_train(&xtr, &ytr, config)?;
                xte.iter_rows()
                    .map(|r| m.predict(r))
                    .collect::<Result<_>>()?
            }
            Strategy::Cpc => {
                let m = cpc_train(&xtr, &ytr, config)?;
                let mut pred = Vec::with_capacity(xte.rows());
                for (r, &t) in xte.iter_rows().zip(&yte) {
                    let p = m.probabilities(r)?;
                    scores.push(p.iter().copied().fold(f64::NEG_INFINITY, f64::max));
                    healthy.push(t == 0);
                    pred.push(cpc_predict(&p, config.boundary));
                }
                pred
            }
        };
        folds.push(rates(&pred, &yte));
    }
    let n = folds.len() as f64;
    let mean = HealthClass::ALL
        .iter()
        .map(|&class| ClassRates {
            class,
            sensitivity: folds
                .iter()
                .map(|f| f[class.index()].sensitivity)
                .sum::<f64>()
                / n,
            specificity: folds
                .iter()
                .map(|f| f[class.index()].specificity)
                .sum::<f64>()
                / n,
        })
        .collect();
    let roc = match (strategy, roc_boundaries) {
        (Strategy::Cpc, Some(b)) => Some(roc_curve(&scores, &healthy, b)?),
        _ => None,
    };
    Ok(MulticlassReport {
        strategy,
        combination,
        boundary: config.boundary,
        folds,
        mean,
        roc,
    })
}
