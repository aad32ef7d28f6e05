//! Dataset persistence: one CSV row per accepted patient plus a JSON
//! metadata document next to it.
//!
//! CSV columns: `id, seed, class` (0 = healthy, 1 = aorta, 2 = iliac 1,
//! 3 = iliac 2), the 28 parameter columns of [`PARAMETER_COLUMNS`] and the
//! 66 raw feature columns of [`feature_names`]. Stenosis columns are empty
//! for healthy patients.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::build::VpdConfig;
use super::distributions::HealthClass;
use super::features::{feature_names, Standardization, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::model::{
    InletFlowSeries, NetworkParameters, Stenosis, StenosisSpec, VesselGeometry, WindkesselParams,
};

pub const FORMAT_VERSION: u32 = 1;

/// Parameter column names, SI units in the suffix.
pub const PARAMETER_COLUMNS: [&str; 28] = [
    "aorta_length_m",
    "aorta_diameter_m",
    "aorta_thickness_m",
    "aorta_youngs_modulus_pa",
    "iliac_length_m",
    "iliac_diameter_m",
    "iliac_thickness_m",
    "iliac_youngs_modulus_pa",
    "wk1_r1_pa_s_m3",
    "wk1_r2_pa_s_m3",
    "wk1_c_m3_pa",
    "wk2_r1_pa_s_m3",
    "wk2_r2_pa_s_m3",
    "wk2_c_m3_pa",
    "inlet_b0_m3_s",
    "inlet_a1_m3_s",
    "inlet_b1_m3_s",
    "inlet_a2_m3_s",
    "inlet_b2_m3_s",
    "inlet_a3_m3_s",
    "inlet_b3_m3_s",
    "inlet_a4_m3_s",
    "inlet_b4_m3_s",
    "inlet_a5_m3_s",
    "inlet_b5_m3_s",
    "stenosis_severity",
    "stenosis_start",
    "stenosis_end",
];

/// One accepted virtual patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub id: u64,
    pub seed: u64,
    pub class: HealthClass,
    pub params: NetworkParameters,
    /// Raw Fourier features in block order.
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionFlag {
    pub id: u64,
    pub signal: String,
    pub relative_error: f64,
}

/// Standardization statistics recorded with a cohort, computed from the
/// training rows of the first fold of the default split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord {
    pub rule: String,
    pub split_seed: u64,
    pub train_rows: usize,
    pub stats: Standardization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub format_version: u32,
    pub seed: u64,
    pub distribution_version: String,
    pub inlet_coefficient_rule: String,
    pub class_targets: [usize; 4],
    pub class_counts: [usize; 4],
    /// Patients simulated while their class still had room.
    pub attempts: usize,
    pub accepted: usize,
    /// Rejections by reason; they sum to `attempts - accepted`.
    pub rejections: BTreeMap<String, usize>,
    /// Drawn patients whose class was already full. Not attempts.
    pub skipped: usize,
    pub reconstruction_threshold: f64,
    pub reconstruction_flags: Vec<ReconstructionFlag>,
    pub standardization: Option<StandardizationRecord>,
    pub config: VpdConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub patients: Vec<PatientRecord>,
    pub metadata: DatasetMetadata,
}

/// `cohort.csv` → `cohort.json`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn header() -> Vec<String> {
    let mut h = vec!["id".to_string(), "seed".to_string(), "class".to_string()];
    h.extend(PARAMETER_COLUMNS.iter().map(|s| s.to_string()));
    h.extend(feature_names());
    h
}

fn parameter_values(p: &NetworkParameters) -> Vec<Option<f64>> {
    let geometry = |g: &VesselGeometry| {
        [
            g.length,
            g.diastolic_diameter,
            g.wall_thickness,
            g.youngs_modulus,
        ]
    };
    let wk = |w: &WindkesselParams| [w.proximal_resistance, w.distal_resistance, w.compliance];
    let mut v: Vec<Option<f64>> = Vec::with_capacity(28);
    v.extend(geometry(&p.aorta).map(Some));
    v.extend(geometry(&p.iliac).map(Some));
    v.extend(wk(&p.windkessel_1).map(Some));
    v.extend(wk(&p.windkessel_2).map(Some));
    v.extend(p.inlet.free_coefficients().map(Some));
    match &p.stenosis {
        Some(s) => v.extend([Some(s.spec.severity), Some(s.spec.start), Some(s.spec.end)]),
        None => v.extend([None, None, None]),
    }
    v
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn classes(&self) -> Vec<HealthClass> {
        self.patients.iter().map(|p| p.class).collect()
    }

    pub fn feature_rows(&self) -> Vec<Vec<f64>> {
        self.patients.iter().map(|p| p.features.clone()).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header())?;
        for p in &self.patients {
            let mut row = vec![
                p.id.to_string(),
                p.seed.to_string(),
                p.class.index().to_string(),
            ];
            row.extend(
                parameter_values(&p.params)
                    .into_iter()
                    .map(|v| v.map(fmt).unwrap_or_default()),
            );
            row.extend(p.features.iter().map(|&v| fmt(v)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `csv` and its metadata file.
    pub fn save(&self, csv: &Path) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(csv)?))?;
        let mut json = serde_json::to_string_pretty(&self.metadata)?;
        json.push('\n');
        std::fs::write(metadata_path(csv), json)?;
        Ok(())
    }

    pub fn load(csv: &Path) -> Result<Self> {
        let meta_path = metadata_path(csv);
        let metadata: DatasetMetadata =
            serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| {
                Error::Data(format!("cannot read metadata {}: {e}", meta_path.display()))
            })?)?;
        if metadata.format_version != FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported dataset format {}",
                metadata.format_version
            )));
        }
        let patients = read_patients(File::open(csv)?, &metadata)?;
        Ok(Self { patients, metadata })
    }
}

/// Parses the CSV body, rebuilding full parameters with the fixed
/// quantities recorded in `metadata`.
pub fn read_patients<R: Read>(input: R, metadata: &DatasetMetadata) -> Result<Vec<PatientRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let expected = header();
    let found: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if found != expected {
        return Err(Error::Data(
            "dataset header does not match the expected schema".into(),
        ));
    }
    let dist = &metadata.config.distributions;
    let mut patients = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let bad = |what: &str| Error::Data(format!("row {}: invalid {what}", line + 1));
        let int = |k: usize| record[k].parse::<u64>().map_err(|_| bad(&expected[k]));
        let float = |k: usize| record[k].parse::<f64>().map_err(|_| bad(&expected[k]));
        let class = HealthClass::from_index(int(2)? as usize)?;
        let p: Vec<f64> = (3..28).map(float).collect::<Result<_>>()?;
        let geometry = |o: usize| VesselGeometry::new(p[o], p[o + 1], p[o + 2], p[o + 3]);
        let wk = |o: usize| {
            WindkesselParams::new(p[o], p[o + 1], p[o + 2], dist.windkessel.outflow_pressure)
        };
        let stenosis = match class.vessel() {
            Some(vessel) => {
                let spec = StenosisSpec::from_lesion(float(28)?, float(29)?, float(30)?)?;
                Some(Stenosis { vessel, spec })
            }
            None => {
                if (28..31).any(|k| !record[k].is_empty()) {
                    return Err(bad("stenosis columns for a healthy patient"));
                }
                None
            }
        };
        let params = NetworkParameters {
            aorta: geometry(0)?,
            iliac: geometry(4)?,
            windkessel_1: wk(8)?,
            windkessel_2: wk(11)?,
            inlet: InletFlowSeries::from_free_coefficients(dist.period, &p[14..25])?,
            blood: dist.blood,
            external_pressure: dist.external_pressure,
            diastolic_pressure: dist.diastolic_pressure,
            stenosis,
        };
        let features: Vec<f64> = (31..31 + FEATURE_COUNT).map(float).collect::<Result<_>>()?;
        patients.push(PatientRecord {
            id: int(0)?,
            seed: int(1)?,
            class,
            params,
            features,
        });
    }
    Ok(patients)
}
