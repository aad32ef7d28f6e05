use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    stenosis, BloodProperties, InletFlowSeries, NetworkParameters, Stenosis, StenosisSpec,
    VesselGeometry, VesselId, WindkesselParams, REFERENCE_INLET_COEFFICIENTS,
};

/// Every sampled parameter has a standard deviation of this fraction of its
/// mean.
pub const STD_FRACTION: f64 = 0.2;

/// Inlet coefficients with zero mean get `STD_FRACTION * max|mean| *` this.
pub const ZERO_MEAN_COEFFICIENT_SCALE: f64 = 0.05;

const MAX_RESAMPLES: usize = 100;

/// Health classification of a virtual patient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HealthClass {
    Healthy = 0,
    AortaDiseased = 1,
    Iliac1Diseased = 2,
    Iliac2Diseased = 3,
}

impl HealthClass {
    pub const ALL: [HealthClass; 4] = [
        HealthClass::Healthy,
        HealthClass::AortaDiseased,
        HealthClass::Iliac1Diseased,
        HealthClass::Iliac2Diseased,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        Self::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Data(format!("class index {i} outside 0..=3")))
    }

    pub fn vessel(self) -> Option<VesselId> {
        match self {
            HealthClass::Healthy => None,
            HealthClass::AortaDiseased => Some(VesselId::Aorta),
            HealthClass::Iliac1Diseased => Some(VesselId::Iliac1),
            HealthClass::Iliac2Diseased => Some(VesselId::Iliac2),
        }
    }

    pub fn from_vessel(vessel: Option<VesselId>) -> Self {
        match vessel {
            None => HealthClass::Healthy,
            Some(VesselId::Aorta) => HealthClass::AortaDiseased,
            Some(VesselId::Iliac1) => HealthClass::Iliac1Diseased,
            Some(VesselId::Iliac2) => HealthClass::Iliac2Diseased,
        }
    }

    pub fn of(params: &NetworkParameters) -> Self {
        Self::from_vessel(params.stenosis.map(|s| s.vessel))
    }

    /// `C1` to `C4`.
    pub fn label(self) -> &'static str {
        ["C1", "C2", "C3", "C4"][self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            HealthClass::Healthy => "healthy",
            HealthClass::AortaDiseased => "aorta",
            HealthClass::Iliac1Diseased => "iliac1",
            HealthClass::Iliac2Diseased => "iliac2",
        }
    }
}

impl fmt::Display for HealthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Means of the sampled cohort parameters plus the fixed quantities shared
/// by every patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterDistributions {
    pub aorta: VesselGeometry,
    pub iliac: VesselGeometry,
    /// Means for both outlets; each outlet is drawn independently.
    pub windkessel: WindkesselParams,
    /// Means of `(b_0, a_1, b_1, ..., a_5, b_5)`, m³/s.
    pub inlet: [f64; 11],
    pub period: f64,
    pub blood: BloodProperties,
    pub external_pressure: f64,
    pub diastolic_pressure: f64,
    /// Probability that a patient is healthy; the rest is split evenly over
    /// the three vessels.
    pub healthy_probability: f64,
}

impl Default for ParameterDistributions {
    fn default() -> Self {
        let reference = NetworkParameters::reference();
        Self {
            aorta: reference.aorta,
            iliac: reference.iliac,
            windkessel: reference.windkessel_1,
            inlet: REFERENCE_INLET_COEFFICIENTS,
            period: reference.inlet.period,
            blood: reference.blood,
            external_pressure: reference.external_pressure,
            diastolic_pressure: reference.diastolic_pressure,
            healthy_probability: 0.5,
        }
    }
}

impl ParameterDistributions {
    pub const VERSION: &'static str = "table1-sd20-v1";

    pub fn validate(&self) -> Result<()> {
        self.aorta.validate()?;
        self.iliac.validate()?;
        self.windkessel.validate()?;
        self.blood.validate()?;
        InletFlowSeries::from_free_coefficients(self.period, &self.inlet)?;
        if !(0.0..=1.0).contains(&self.healthy_probability) {
            return Err(Error::invalid("healthy_probability", "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Standard deviations of the inlet coefficients.
    pub fn inlet_std(&self) -> [f64; 11] {
        let largest = self.inlet.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        self.inlet.map(|c| {
            if c == 0.0 {
                STD_FRACTION * largest * ZERO_MEAN_COEFFICIENT_SCALE
            } else {
                STD_FRACTION * c.abs()
            }
        })
    }
}

fn positive_normal<R: Rng + ?Sized>(rng: &mut R, name: &str, mean: f64) -> Result<f64> {
    let dist =
        Normal::new(mean, STD_FRACTION * mean).map_err(|e| Error::invalid(name, e.to_string()))?;
    for _ in 0..MAX_RESAMPLES {
        let v = dist.sample(rng);
        if v > 0.0 {
            return Ok(v);
        }
    }
    Err(Error::invalid(
        name,
        "no positive draw after repeated resampling",
    ))
}

fn sample_geometry<R: Rng + ?Sized>(rng: &mut R, means: &VesselGeometry) -> Result<VesselGeometry> {
    Ok(VesselGeometry {
        length: positive_normal(rng, "length", means.length)?,
        diastolic_diameter: positive_normal(rng, "diastolic_diameter", means.diastolic_diameter)?,
        wall_thickness: positive_normal(rng, "wall_thickness", means.wall_thickness)?,
        youngs_modulus: positive_normal(rng, "youngs_modulus", means.youngs_modulus)?,
    })
}

fn sample_windkessel<R: Rng + ?Sized>(
    rng: &mut R,
    means: &WindkesselParams,
) -> Result<WindkesselParams> {
    Ok(WindkesselParams {
        proximal_resistance: positive_normal(
            rng,
            "proximal_resistance",
            means.proximal_resistance,
        )?,
        distal_resistance: positive_normal(rng, "distal_resistance", means.distal_resistance)?,
        compliance: positive_normal(rng, "compliance", means.compliance)?,
        outflow_pressure: means.outflow_pressure,
    })
}

/// Draws a lesion: reference point, then start, end and severity, each
/// uniform within the bounds left by the previous draws.
pub fn sample_stenosis<R: Rng + ?Sized>(rng: &mut R) -> Result<StenosisSpec> {
    let (r_lo, r_hi) = stenosis::REFERENCE_RANGE;
    let r = rng.random_range(r_lo..=r_hi);
    let b = rng.random_range(stenosis::START_MIN..=r - stenosis::HALF_MIN_LENGTH);
    let e = rng.random_range(r + stenosis::HALF_MIN_LENGTH..=stenosis::END_MAX);
    let (s_lo, s_hi) = stenosis::SEVERITY_RANGE;
    let s = rng.random_range(s_lo..=s_hi);
    StenosisSpec::new(s, b, e, r)
}

/// Draws one virtual patient.
pub fn sample_patient<R: Rng + ?Sized>(
    rng: &mut R,
    dist: &ParameterDistributions,
) -> Result<(NetworkParameters, HealthClass)> {
    let aorta = sample_geometry(rng, &dist.aorta)?;
    let iliac = sample_geometry(rng, &dist.iliac)?;
    let windkessel_1 = sample_windkessel(rng, &dist.windkessel)?;
    let windkessel_2 = sample_windkessel(rng, &dist.windkessel)?;
    let std = dist.inlet_std();
    let mut coefficients = [0.0; 11];
    for (k, c) in coefficients.iter_mut().enumerate() {
        let normal = Normal::new(dist.inlet[k], std[k])
            .map_err(|e| Error::invalid("inlet", e.to_string()))?;
        *c = normal.sample(rng);
    }
    let inlet = InletFlowSeries::from_free_coefficients(dist.period, &coefficients)?;

    let class = if rng.random_bool(dist.healthy_probability) {
        HealthClass::Healthy
    } else {
        HealthClass::ALL[1 + rng.random_range(0..3usize)]
    };
    let stenosis = match class.vessel() {
        Some(vessel) => Some(Stenosis {
            vessel,
            spec: sample_stenosis(rng)?,
        }),
        None => None,
    };
    let params = NetworkParameters {
        aorta,
        iliac,
        windkessel_1,
        windkessel_2,
        inlet,
        blood: dist.blood,
        external_pressure: dist.external_pressure,
        diastolic_pressure: dist.diastolic_pressure,
        stenosis,
    };
    params.validate()?;
    Ok((params, class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn class_frequencies_match_the_design() {
        let dist = ParameterDistributions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_patient(&mut rng, &dist).unwrap().1.index()] += 1;
        }
        let expected = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (c, p) in counts.iter().zip(expected) {
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn lesions_respect_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s = sample_stenosis(&mut rng).unwrap();
            assert!(s.end - s.start >= 0.1 - 1e-12);
            assert!((0.5..=0.9).contains(&s.severity));
        }
    }

    #[test]
    fn aorta_length_moments() {
        let dist = ParameterDistributions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_geometry(&mut rng, &dist.aorta).unwrap().length)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - 0.086).abs() / 0.086 < 0.01, "{mean}");
        assert!((sd - 0.0172).abs() / 0.0172 < 0.01, "{sd}");
    }

    #[test]
    fn zero_mean_coefficient_gets_scaled_spread() {
        let dist = ParameterDistributions::default();
        let std = dist.inlet_std();
        assert_eq!(dist.inlet[10], 0.0);
        let largest = dist.inlet.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        assert!((std[10] - 0.2 * 0.05 * largest).abs() < 1e-20);
        assert!((std[0] - 0.2 * dist.inlet[0]).abs() < 1e-20);
    }

    #[test]
    fn class_is_consistent_with_parameters() {
        let dist = ParameterDistributions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let (p, c) = sample_patient(&mut rng, &dist).unwrap();
            assert_eq!(HealthClass::of(&p), c);
        }
    }
}
