use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{
    Dataset, DatasetMetadata, PatientRecord, ReconstructionFlag, StandardizationRecord,
    FORMAT_VERSION,
};
use super::distributions::{sample_patient, HealthClass, ParameterDistributions};
use super::features::{extract_features, feature_names, Measurement, Standardization};
use super::filters::{apply_filters, FilterLimits, FilterRule};
use crate::error::{Error, Result};
use crate::model::NetworkParameters;
use crate::rng::{substream, substream_seed};
use crate::solver::{simulate, NumericsConfig, Waveforms};
use crate::tasks::{split_folds, DEFAULT_FOLDS};

/// Default cohort size: 3,564 healthy and 1,188 per diseased vessel.
pub const DEFAULT_COHORT_SIZE: usize = 7128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VpdConfig {
    pub n_target: usize,
    pub seed: u64,
    pub distributions: ParameterDistributions,
    pub numerics: NumericsConfig,
    pub filters: FilterLimits,
    /// Largest tolerated share of attempts whose simulation failed.
    pub failure_rate_limit: f64,
    /// Attempts before the failure rate is enforced.
    pub failure_rate_min_attempts: usize,
    /// Consecutive patient ids drawn per generation round.
    pub batch_size: usize,
    /// Relative L2 reconstruction error above which a signal is flagged.
    pub reconstruction_threshold: f64,
}

impl Default for VpdConfig {
    fn default() -> Self {
        Self {
            n_target: DEFAULT_COHORT_SIZE,
            seed: 0,
            distributions: ParameterDistributions::default(),
            numerics: NumericsConfig::default(),
            filters: FilterLimits::default(),
            failure_rate_limit: 0.2,
            failure_rate_min_attempts: 50,
            batch_size: 64,
            reconstruction_threshold: 0.05,
        }
    }
}

impl VpdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_target < 4 {
            return Err(Error::invalid("n_target", "must be at least 4"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        let p = self.distributions.healthy_probability;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(
                "healthy_probability",
                "must lie strictly between 0 and 1",
            ));
        }
        self.distributions.validate()?;
        self.numerics.validate()
    }

    /// Half healthy, the rest split evenly over the vessels (any remainder
    /// goes to the lower class indices).
    pub fn class_targets(&self) -> [usize; 4] {
        let healthy = self.n_target / 2;
        let diseased = self.n_target - healthy;
        let (base, extra) = (diseased / 3, diseased % 3);
        [
            healthy,
            base + usize::from(extra > 0),
            base + usize::from(extra > 1),
            base,
        ]
    }
}

/// A patient that passed every filter, with its waveforms.
#[derive(Debug, Clone)]
pub struct AcceptedPatient {
    pub record: PatientRecord,
    pub waveforms: Waveforms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildProgress {
    pub accepted: usize,
    pub target: usize,
    pub attempts: usize,
}

enum Outcome {
    Accepted(Box<AcceptedPatient>, [f64; 6]),
    Rejected(String),
}

fn rejection_reason(e: &Error) -> &'static str {
    match e {
        Error::NonConvergence { .. } => "non_convergence",
        Error::NumericalBlowup { .. } => "numerical_blowup",
        Error::InstabilityAtSeverity { .. } => "instability",
        Error::JunctionSolve { .. } => "junction_solve",
        _ => "simulation_error",
    }
}

fn filter_reason(rule: FilterRule) -> &'static str {
    match rule {
        FilterRule::MaxPressure => "filter_max_pressure",
        FilterRule::MinPressure => "filter_min_pressure",
        FilterRule::PulsePressure => "filter_pulse_pressure",
    }
}

fn evaluate(
    id: u64,
    seed: u64,
    params: NetworkParameters,
    class: HealthClass,
    config: &VpdConfig,
) -> Outcome {
    let sim = match simulate(&params, &config.numerics) {
        Ok(sim) => sim,
        Err(e) => return Outcome::Rejected(rejection_reason(&e).to_string()),
    };
    if let Some(rule) = apply_filters(&sim.waveforms.p1, &config.filters) {
        return Outcome::Rejected(filter_reason(rule).to_string());
    }
    match extract_features(&sim.waveforms) {
        Ok(f) => Outcome::Accepted(
            Box::new(AcceptedPatient {
                record: PatientRecord {
                    id,
                    seed,
                    class,
                    params,
                    features: f.values,
                },
                waveforms: sim.waveforms,
            }),
            f.reconstruction_errors,
        ),
        Err(_) => Outcome::Rejected("feature_extraction".to_string()),
    }
}

/// Generates a cohort. See [`build_vpd_with`].
pub fn build_vpd(config: &VpdConfig, workers: usize) -> Result<Dataset> {
    Ok(build_vpd_with(config, workers, |_| {})?.0)
}

/// Draws patients with ids 0, 1, 2, ... and keeps those that simulate
/// cleanly and pass the filters until every class target is met.
///
/// Patient `id` uses the random substream `(seed, id)`. A drawn patient
/// whose class is already full is skipped without being simulated or
/// counted. Ids are processed in fixed-size batches and reduced in id
/// order, so the result does not depend on `workers`.
pub fn build_vpd_with(
    config: &VpdConfig,
    workers: usize,
    mut progress: impl FnMut(&BuildProgress),
) -> Result<(Dataset, Vec<AcceptedPatient>)> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let targets = config.class_targets();
    let max_ids = 200 * config.n_target as u64 + 10_000;

    let mut counts = [0usize; 4];
    let mut accepted: Vec<AcceptedPatient> = Vec::with_capacity(config.n_target);
    let mut rejections: BTreeMap<String, usize> = BTreeMap::new();
    let mut flags = Vec::new();
    let (mut attempts, mut failures, mut skipped) = (0usize, 0usize, 0usize);
    let mut next_id = 0u64;

    while counts != targets {
        if next_id >= max_ids {
            return Err(Error::Data(format!(
                "class targets {targets:?} not reached after {max_ids} draws"
            )));
        }
        let ids = next_id..next_id + config.batch_size as u64;
        next_id = ids.end;
        let mut candidates = Vec::new();
        for id in ids {
            let seed = substream_seed(config.seed, id);
            let mut rng = substream(config.seed, id);
            match sample_patient(&mut rng, &config.distributions) {
                Ok((params, class)) => candidates.push((id, seed, Some((params, class)))),
                Err(_) => candidates.push((id, seed, None)),
            }
        }
        let outcomes: Vec<Option<Outcome>> = pool.install(|| {
            candidates
                .par_iter()
                .map(|(id, seed, draw)| match draw {
                    Some((params, class)) if counts[class.index()] < targets[class.index()] => {
                        Some(evaluate(*id, *seed, *params, *class, config))
                    }
                    Some(_) => None,
                    None => Some(Outcome::Rejected("sampling".to_string())),
                })
                .collect()
        });

        for ((_, _, draw), outcome) in candidates.iter().zip(outcomes) {
            if let Some((_, class)) = draw {
                if counts[class.index()] >= targets[class.index()] {
                    skipped += 1;
                    continue;
                }
            }
            let Some(outcome) = outcome else { continue };
            attempts += 1;
            match outcome {
                Outcome::Accepted(patient, errors) => {
                    for m in Measurement::ALL {
                        let e = errors[m.block()];
                        if !(e < config.reconstruction_threshold) {
                            flags.push(ReconstructionFlag {
                                id: patient.record.id,
                                signal: m.name().to_string(),
                                relative_error: e,
                            });
                        }
                    }
                    counts[patient.record.class.index()] += 1;
                    accepted.push(*patient);
                }
                Outcome::Rejected(reason) => {
                    if !reason.starts_with("filter_") {
                        failures += 1;
                    }
                    *rejections.entry(reason).or_default() += 1;
                }
            }
        }
        if attempts >= config.failure_rate_min_attempts {
            let rate = failures as f64 / attempts as f64;
            if rate > config.failure_rate_limit {
                return Err(Error::FailureRate {
                    rate,
                    limit: config.failure_rate_limit,
                    attempts,
                });
            }
        }
        progress(&BuildProgress {
            accepted: accepted.len(),
            target: config.n_target,
            attempts,
        });
    }

    let patients: Vec<PatientRecord> = accepted.iter().map(|p| p.record.clone()).collect();
    let standardization = standardization_record(&patients, config.seed);
    let metadata = DatasetMetadata {
        format_version: FORMAT_VERSION,
        seed: config.seed,
        distribution_version: ParameterDistributions::VERSION.to_string(),
        inlet_coefficient_rule: format!(
            "independent normal, std = 0.2*|mean|; zero-mean coefficients use std = 0.2*{}*max|mean|",
            super::distributions::ZERO_MEAN_COEFFICIENT_SCALE
        ),
        class_targets: targets,
        class_counts: counts,
        attempts,
        accepted: patients.len(),
        rejections,
        skipped,
        reconstruction_threshold: config.reconstruction_threshold,
        reconstruction_flags: flags,
        standardization,
        config: config.clone(),
    };
    Ok((Dataset { patients, metadata }, accepted))
}

fn standardization_record(patients: &[PatientRecord], seed: u64) -> Option<StandardizationRecord> {
    let labels: Vec<usize> = patients.iter().map(|p| p.class.index()).collect();
    let plan = split_folds(&labels, seed, DEFAULT_FOLDS).ok()?;
    let rows: Vec<Vec<f64>> = patients.iter().map(|p| p.features.clone()).collect();
    let train = &plan.folds[0].train;
    let stats = Standardization::fit(&rows, train, &feature_names()).ok()?;
    Some(StandardizationRecord {
        rule: "training rows of fold 0 of the stratified 2/3 split with the cohort seed"
            .to_string(),
        split_seed: seed,
        train_rows: train.len(),
        stats,
    })
}
