use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combos::{like_for_like_pairs, MeasurementCombination};
use super::evaluate::{evaluate, EvalConfig, Evaluation, Method};
use super::labels::Scheme;
use crate::error::{Error, Result};
use crate::ml::Matrix;
use crate::vpd::HealthClass;

/// One (combination, method) cell. Failed cells keep their error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchCell {
    pub combination: MeasurementCombination,
    pub method: Method,
    pub evaluation: Option<Evaluation>,
    pub error: Option<String>,
}

impl SearchCell {
    pub fn test_f(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.test.f_score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTable {
    pub scheme: Scheme,
    pub methods: Vec<Method>,
    /// Canonical combination order, methods in the given order within
    /// each combination.
    pub cells: Vec<SearchCell>,
}

impl SearchTable {
    pub fn cell(&self, combination: MeasurementCombination, method: Method) -> Option<&SearchCell> {
        self.cells
            .iter()
            .find(|c| c.combination == combination && c.method == method)
    }

    pub fn for_method(&self, method: Method) -> impl Iterator<Item = &SearchCell> {
        self.cells.iter().filter(move |c| c.method == method)
    }

    /// Cell with the highest mean test F for `method`; ties keep the
    /// canonically earlier combination.
    pub fn best(&self, method: Method) -> Option<&SearchCell> {
        let mut best: Option<&SearchCell> = None;
        for c in self.for_method(method) {
            if let Some(f) = c.test_f() {
                if best.and_then(SearchCell::test_f).is_none_or(|b| f > b) {
                    best = Some(c);
                }
            }
        }
        best
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))
}

/// Evaluates every method on all 63 measurement combinations with one
/// shared fold plan. Cells run in parallel on `workers` threads; the
/// table does not depend on the worker count.
pub fn combination_search(
    features: &Matrix,
    classes: &[HealthClass],
    scheme: Scheme,
    methods: &[Method],
    config: &EvalConfig,
    workers: usize,
) -> Result<SearchTable> {
    config.validate()?;
    if !scheme.is_binary() {
        return Err(Error::invalid(
            "scheme",
            "combination search needs a binary scheme",
        ));
    }
    let plan = config.fold_plan(classes)?;
    let jobs: Vec<(MeasurementCombination, Method)> = MeasurementCombination::all()
        .into_iter()
        .flat_map(|c| methods.iter().map(move |&m| (c, m)))
        .collect();
    let cells = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(combination, method)| {
                match evaluate(
                    features,
                    classes,
                    scheme,
                    method,
                    combination,
                    &plan,
                    config,
                ) {
                    Ok(e) => SearchCell {
                        combination,
                        method,
                        evaluation: Some(e),
                        error: None,
                    },
                    Err(e) => SearchCell {
                        combination,
                        method,
                        evaluation: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    Ok(SearchTable {
        scheme,
        methods: methods.to_vec(),
        cells,
    })
}

/// Test F statistics over all combinations of one size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub method: Method,
    pub size: usize,
    pub mean_f: f64,
    pub min_f: f64,
    pub max_f: f64,
    /// Cells that produced a result.
    pub count: usize,
}

pub fn size_summary(table: &SearchTable) -> Vec<SizeSummary> {
    let mut out = Vec::new();
    for &method in &table.methods {
        for size in 1..=6 {
            let fs: Vec<f64> = table
                .for_method(method)
                .filter(|c| c.combination.len() == size)
                .filter_map(SearchCell::test_f)
                .collect();
            if fs.is_empty() {
                continue;
            }
            out.push(SizeSummary {
                method,
                size,
                mean_f: fs.iter().sum::<f64>() / fs.len() as f64,
                min_f: fs.iter().copied().fold(f64::INFINITY, f64::min),
                max_f: fs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                count: fs.len(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDiscrepancy {
    pub method: Method,
    pub combination: MeasurementCombination,
    pub mirror: MeasurementCombination,
    pub f: f64,
    pub mirror_f: f64,
    pub abs_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancySummary {
    pub method: Method,
    pub pairs: usize,
    pub median_abs_delta: f64,
    pub max_abs_delta: f64,
    pub above_0_01: usize,
    pub above_0_025: usize,
}

/// F differences between like-for-like combination pairs.
pub fn like_for_like(table: &SearchTable) -> (Vec<PairDiscrepancy>, Vec<DiscrepancySummary>) {
    let mut pairs = Vec::new();
    let mut summaries = Vec::new();
    for &method in &table.methods {
        let mut deltas = Vec::new();
        for (a, b) in like_for_like_pairs() {
            let fa = table.cell(a, method).and_then(SearchCell::test_f);
            let fb = table.cell(b, method).and_then(SearchCell::test_f);
            if let (Some(f), Some(mirror_f)) = (fa, fb) {
                let abs_delta = (f - mirror_f).abs();
                deltas.push(abs_delta);
                pairs.push(PairDiscrepancy {
                    method,
                    combination: a,
                    mirror: b,
                    f,
                    mirror_f,
                    abs_delta,
                });
            }
        }
        if deltas.is_empty() {
            continue;
        }
        summaries.push(DiscrepancySummary {
            method,
            pairs: deltas.len(),
            median_abs_delta: median(&deltas),
            max_abs_delta: deltas.iter().copied().fold(0.0, f64::max),
            above_0_01: deltas.iter().filter(|&&d| d > 0.01).count(),
            above_0_025: deltas.iter().filter(|&&d| d > 0.025).count(),
        });
    }
    (pairs, summaries)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vpd::FEATURE_COUNT;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cohort(n: usize) -> (Matrix, Vec<HealthClass>) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let classes: Vec<HealthClass> = (0..n)
            .map(|i| HealthClass::ALL[[0, 0, 0, 1, 2, 3][i % 6]])
            .collect();
        let data = (0..n * FEATURE_COUNT)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        (Matrix::new(n, FEATURE_COUNT, data).unwrap(), classes)
    }

    #[test]
    fn table_shape_and_worker_invariance() {
        let (x, classes) = cohort(48);
        let config = EvalConfig {
            forest_grid: vec![(5, Some(3))],
            ..Default::default()
        };
        let methods = [Method::Nb, Method::Lr];
        let a = combination_search(&x, &classes, Scheme::Enbc, &methods, &config, 1).unwrap();
        let b = combination_search(&x, &classes, Scheme::Enbc, &methods, &config, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2 * 63);
        for m in methods {
            assert_eq!(a.for_method(m).count(), 63);
        }
        let sizes = size_summary(&a);
        assert_eq!(
            sizes
                .iter()
                .filter(|s| s.method == Method::Lr)
                .map(|s| s.count)
                .collect::<Vec<_>>(),
            [6, 15, 20, 15, 6, 1]
        );
        let (pairs, summary) = like_for_like(&a);
        assert_eq!(pairs.len(), 48);
        assert_eq!(summary.len(), 2);
    }

    #[test]
    fn failing_cells_do_not_abort_the_sweep() {
        let (mut x, classes) = cohort(30);
        // Constant Q3 block: standardization fails for every Q3 combination.
        let mut rows: Vec<Vec<f64>> = x.iter_rows().map(<[f64]>::to_vec).collect();
        rows.iter_mut().for_each(|r| r[..11].fill(0.0));
        x = Matrix::from_rows(&rows).unwrap();
        let t = combination_search(
            &x,
            &classes,
            Scheme::Enbc,
            &[Method::Lr],
            &EvalConfig::default(),
            2,
        )
        .unwrap();
        let failed = t.cells.iter().filter(|c| c.error.is_some()).count();
        assert_eq!(failed, 32);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
