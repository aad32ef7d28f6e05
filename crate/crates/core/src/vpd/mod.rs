//! Virtual patient database: parameter sampling, simulation, physiological
//! filtering, Fourier features, standardization and persistence.

mod build;
mod dataset;
mod distributions;
mod features;
mod filters;
mod fourier;

pub use build::{
    build_vpd, build_vpd_with, AcceptedPatient, BuildProgress, VpdConfig, DEFAULT_COHORT_SIZE,
};
pub use dataset::{
    header, metadata_path, read_patients, Dataset, DatasetMetadata, PatientRecord,
    ReconstructionFlag, StandardizationRecord, FORMAT_VERSION, PARAMETER_COLUMNS,
};
pub use distributions::{
    sample_patient, sample_stenosis, HealthClass, ParameterDistributions, STD_FRACTION,
    ZERO_MEAN_COEFFICIENT_SCALE,
};
pub use features::{
    extract_features, feature_names, ExtractedFeatures, Measurement, Standardization, FEATURE_COUNT,
};
pub use filters::{apply_filters, FilterLimits, FilterRule, PASCAL_PER_MMHG};
pub use fourier::{fit_fourier, synthesize, FourierFit, COEFFICIENTS_PER_SIGNAL, FOURIER_ORDER};
