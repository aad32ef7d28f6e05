use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combos::MeasurementCombination;
use super::evaluate::{evaluate, EvalConfig, Method};
use super::folds::split_folds;
use super::labels::Scheme;
use super::search::pool;
use crate::error::{Error, Result};
use crate::ml::Matrix;
use crate::model::VesselId;
use crate::rng::substream;
use crate::vpd::HealthClass;

/// Stream of the configured seed that drives subsampling.
const SUBSAMPLE_STREAM: u64 = 0x5AB5;

/// 1000, 2000, ... up to `n`; quarters of `n` for cohorts below 1000.
pub fn default_sizes(n: usize) -> Vec<usize> {
    if n >= 1000 {
        (1..=n / 1000).map(|k| 1000 * k).collect()
    } else {
        (1..=4).map(|k| n * k / 4).filter(|&s| s > 0).collect()
    }
}

/// Subsample row ids for every size. One seeded permutation is cut at each
/// size, so a smaller subsample is contained in every larger one. Ids are
/// sorted.
pub fn nested_subsamples(n: usize, sizes: &[usize], seed: u64) -> Result<Vec<Vec<usize>>> {
    if let Some(&s) = sizes.iter().find(|&&s| s > n || s == 0) {
        return Err(Error::invalid("sizes", format!("size {s} outside 1..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, SUBSAMPLE_STREAM));
    Ok(sizes
        .iter()
        .map(|&s| {
            let mut ids = order[..s].to_vec();
            ids.sort_unstable();
            ids
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub vessel: VesselId,
    pub train_f: f64,
    pub test_f: f64,
}

/// Train and test F of LR on all six measurements for IVBC of every
/// vessel, on nested subsamples of each size. Rows are ordered by size,
/// then vessel.
pub fn vpd_size_sweep(
    features: &Matrix,
    classes: &[HealthClass],
    sizes: &[usize],
    config: &EvalConfig,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if features.rows() != classes.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            found: classes.len(),
        });
    }
    let subsamples = nested_subsamples(classes.len(), sizes, config.seed)?;
    let all: Vec<usize> = (0..features.cols()).collect();
    let prepared = subsamples
        .iter()
        .map(|ids| {
            let x = features.select(ids, &all);
            let c: Vec<HealthClass> = ids.iter().map(|&i| classes[i]).collect();
            let labels: Vec<usize> = c.iter().map(|h| h.index()).collect();
            let plan = split_folds(&labels, config.seed, config.folds)?;
            Ok((x, c, plan))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, VesselId)> = (0..sizes.len())
        .flat_map(|k| VesselId::ALL.map(|v| (k, v)))
        .collect();
    pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|&(k, vessel)| {
                let (x, c, plan) = &prepared[k];
                let e = evaluate(
                    x,
                    c,
                    Scheme::Ivbc(vessel),
                    Method::Lr,
                    MeasurementCombination::all_six(),
                    plan,
                    config,
                )?;
                Ok(SweepRow {
                    size: sizes[k],
                    vessel,
                    train_f: e.train.f_score,
                    test_f: e.test.f_score,
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vpd::FEATURE_COUNT;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ladders() {
        assert_eq!(
            default_sizes(7128),
            [1000, 2000, 3000, 4000, 5000, 6000, 7000]
        );
        assert_eq!(default_sizes(7000).len(), 7);
        assert_eq!(default_sizes(400), [100, 200, 300, 400]);
    }

    #[test]
    fn subsamples_are_nested() {
        let s = nested_subsamples(500, &[50, 120, 300, 500], 3).unwrap();
        for w in s.windows(2) {
            assert!(w[0].iter().all(|i| w[1].binary_search(i).is_ok()));
        }
        assert_eq!(s[3], (0..500).collect::<Vec<_>>());
        assert!(nested_subsamples(10, &[11], 0).is_err());
    }

    fn noise(n: usize, seed: u64) -> (Matrix, Vec<HealthClass>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = (0..n)
            .map(|i| HealthClass::ALL[[0, 0, 0, 1, 2, 3][i % 6]])
            .collect();
        let data = (0..n * FEATURE_COUNT)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        (Matrix::new(n, FEATURE_COUNT, data).unwrap(), classes)
    }

    #[test]
    fn shape_and_generalization_gap() {
        let mut gap = 0.0;
        for seed in 0..5 {
            let (x, c) = noise(240, seed);
            let config = EvalConfig {
                seed,
                ..Default::default()
            };
            let rows = vpd_size_sweep(&x, &c, &[120, 240], &config, 2).unwrap();
            assert_eq!(rows.len(), 6);
            assert_eq!(rows[0].size, 120);
            assert_eq!(rows[3].vessel, VesselId::Aorta);
            gap += rows
                .iter()
                .filter(|r| r.size == 120)
                .map(|r| r.train_f - r.test_f)
                .sum::<f64>();
        }
        assert!(
            gap > 0.0,
            "train F should exceed test F on noise, gap {gap}"
        );
    }

    #[test]
    fn tiny_subsample_is_rejected() {
        let (x, c) = noise(60, 1);
        assert!(vpd_size_sweep(&x, &c, &[4], &EvalConfig::default(), 1).is_err());
    }
}
