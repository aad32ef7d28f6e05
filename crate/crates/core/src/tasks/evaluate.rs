use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::combos::MeasurementCombination;
use super::folds::{split_folds, FoldPlan, DEFAULT_FOLDS};
use super::labels::Scheme;
use super::metrics::{Confusion, MeanMetrics, Metrics};
use crate::error::{Error, Result};
use crate::ml::{
    lr_train, nb_train, rf_train_grid, svm_train, ClassWeighting, ForestConfig, GridReport,
    LrConfig, Matrix, Model, SvmConfig, DEFAULT_DEPTHS, DEFAULT_TREE_COUNTS,
};
use crate::rng::substream_seed;
use crate::vpd::{feature_names, HealthClass, Standardization};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Method {
    Nb,
    Lr,
    /// RBF kernel.
    Svm,
    SvmLinear,
    Rf,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Nb,
        Method::Lr,
        Method::Svm,
        Method::SvmLinear,
        Method::Rf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Nb => "nb",
            Method::Lr => "lr",
            Method::Svm => "svm",
            Method::SvmLinear => "svm_linear",
            Method::Rf => "rf",
        }
    }

    /// Parses a comma-separated list such as `lr,svm,rf`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut v: Vec<Method> = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        if v.is_empty() {
            return Err(Error::invalid("methods", "at least one method is required"));
        }
        v.sort();
        v.dedup();
        Ok(v)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::invalid(
                    "method",
                    format!("unknown method `{s}` (nb, lr, svm, svm_linear, rf)"),
                )
            })
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Settings shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Seeds the fold plan, subsampling and forests.
    pub seed: u64,
    pub folds: usize,
    /// Effective-count ratio `r` for class weighting.
    pub ratio: f64,
    /// Decision boundary for probabilistic binary classifiers.
    pub boundary: f64,
    pub lr: LrConfig,
    pub svm: SvmConfig,
    /// `n_trees` and `max_depth` are taken from `forest_grid`.
    pub forest: ForestConfig,
    pub forest_grid: Vec<(usize, Option<usize>)>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            folds: DEFAULT_FOLDS,
            ratio: 1.0,
            boundary: 0.5,
            lr: LrConfig::default(),
            svm: SvmConfig::default(),
            forest: ForestConfig::default(),
            forest_grid: DEFAULT_TREE_COUNTS
                .iter()
                .flat_map(|&n| DEFAULT_DEPTHS.map(|d| (n, d)))
                .collect(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds == 0 {
            return Err(Error::invalid("folds", "must be at least 1"));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(Error::invalid("ratio", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&self.boundary) {
            return Err(Error::invalid("boundary", "must lie in [0, 1]"));
        }
        if self.forest_grid.is_empty() {
            return Err(Error::invalid("forest_grid", "must not be empty"));
        }
        self.lr.validate()?;
        self.svm.validate()
    }

    /// Stratified by health class, so every scheme keeps its proportions.
    pub fn fold_plan(&self, classes: &[HealthClass]) -> Result<FoldPlan> {
        let labels: Vec<usize> = classes.iter().map(|c| c.index()).collect();
        split_folds(&labels, self.seed, self.folds)
    }

    fn weighting(&self, scheme: Scheme, y: &[bool]) -> Result<ClassWeighting> {
        match scheme {
            Scheme::Ivbc(_) => ClassWeighting::from_ratio(self.ratio, y),
            _ => Ok(ClassWeighting::UNIT),
        }
    }
}

/// Trains one binary classifier. NB and RF see class 1 as positive.
pub fn train_binary(
    method: Method,
    x: &Matrix,
    y: &[bool],
    weighting: &ClassWeighting,
    config: &EvalConfig,
    seed: u64,
) -> Result<(Model, Option<GridReport>)> {
    let index: Vec<usize> = y.iter().map(|&p| usize::from(p)).collect();
    let class_weights = [1.0, weighting.positive_weight];
    Ok(match method {
        Method::Lr => (
            Model::LogisticRegression(lr_train(x, y, weighting, &config.lr)?),
            None,
        ),
        Method::Svm => (Model::Svm(svm_train(x, y, weighting, &config.svm)?), None),
        Method::SvmLinear => (
            Model::Svm(svm_train(
                x,
                y,
                weighting,
                &SvmConfig {
                    kernel: crate::ml::KernelKind::Linear,
                    ..config.svm
                },
            )?),
            None,
        ),
        Method::Nb => (
            Model::NaiveBayes(nb_train(x, &index, &class_weights)?),
            None,
        ),
        Method::Rf => {
            let base = ForestConfig {
                seed,
                ..config.forest
            };
            let (model, report) =
                rf_train_grid(x, &index, &class_weights, &config.forest_grid, &base)?;
            (Model::RandomForest(model), Some(report))
        }
    })
}

pub fn predict_binary(model: &Model, x: &Matrix, boundary: f64) -> Result<Vec<bool>> {
    x.iter_rows()
        .map(|r| model.predict_binary(r, boundary))
        .collect()
}

/// Raw features restricted to `columns` for `train` and `test` rows,
/// standardized with statistics of the training rows.
pub fn standardized_split(
    features: &Matrix,
    columns: &[usize],
    train: &[usize],
    test: &[usize],
) -> Result<(Matrix, Matrix)> {
    let xtr = features.select(train, columns);
    let xte = features.select(test, columns);
    let names = feature_names();
    let names: Vec<String> = columns.iter().map(|&c| names[c].clone()).collect();
    let rows: Vec<Vec<f64>> = xtr.iter_rows().map(<[f64]>::to_vec).collect();
    let all: Vec<usize> = (0..rows.len()).collect();
    let s = Standardization::fit(&rows, &all, &names)?;
    let apply = |m: &Matrix| -> Result<Matrix> {
        Matrix::from_rows(&m.iter_rows().map(|r| s.apply(r)).collect::<Vec<_>>())
    };
    Ok((apply(&xtr)?, apply(&xte)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub train: Metrics,
    pub test: Metrics,
    pub forest_grid: Option<GridReport>,
    /// Test-row predictions in the order of the fold's test indices.
    #[serde(skip)]
    pub test_predictions: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub folds: Vec<FoldResult>,
    pub test: MeanMetrics,
    pub train: MeanMetrics,
}

/// Trains and scores `method` on every fold of `plan`, using only the
/// feature blocks of `combination`, standardized per fold. IVBC training
/// uses the class weight of the configured ratio, and the same weight
/// enters the precision.
pub fn evaluate(
    features: &Matrix,
    classes: &[HealthClass],
    scheme: Scheme,
    method: Method,
    combination: MeasurementCombination,
    plan: &FoldPlan,
    config: &EvalConfig,
) -> Result<Evaluation> {
    let y = scheme.binary_labels(classes)?;
    let columns = combination.columns();
    let mut folds = Vec::with_capacity(plan.folds.len());
    for (k, fold) in plan.folds.iter().enumerate() {
        let (xtr, xte) = standardized_split(features, &columns, &fold.train, &fold.test)?;
        let ytr: Vec<bool> = fold.train.iter().map(|&i| y[i]).collect();
        let yte: Vec<bool> = fold.test.iter().map(|&i| y[i]).collect();
        let weighting = config.weighting(scheme, &ytr)?;
        let (model, grid) = train_binary(
            method,
            &xtr,
            &ytr,
            &weighting,
            config,
            substream_seed(config.seed, k as u64),
        )?;
        let ptr = predict_binary(&model, &xtr, config.boundary)?;
        let pte = predict_binary(&model, &xte, config.boundary)?;
        let w = weighting.positive_weight;
        folds.push(FoldResult {
            train: Metrics::new(Confusion::from_predictions(&ptr, &ytr), w, 1.0),
            test: Metrics::new(Confusion::from_predictions(&pte, &yte), w, 1.0),
            forest_grid: grid,
            test_predictions: pte,
        });
    }
    let test: Vec<Metrics> = folds.iter().map(|f| f.test).collect();
    let train: Vec<Metrics> = folds.iter().map(|f| f.train).collect();
    Ok(Evaluation {
        test: MeanMetrics::of(&test),
        train: MeanMetrics::of(&train),
        folds,
    })
}
